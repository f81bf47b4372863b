// Command-line front end: file ingestion, one subcommand per analysis,
// machine-readable JSON/CSV output.

#include <cctype>
#include <complex>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"

#include "ctqw/errors.hpp"
#include "ctqw/graph.hpp"
#include "ctqw/hitting.hpp"
#include "ctqw/io.hpp"
#include "ctqw/spectral.hpp"
#include "ctqw/superop.hpp"
#include "ctqw/trajectory.hpp"

namespace {

double parse_double_full(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size() || s.empty())
    throw ctqw::contract_error("bad number '" + s + "'");
  return v;
}

// Accepts a, bi, a+bi, a-bi, i, -i, +i; exponent notation allowed in a and b.
std::complex<double> parse_complex_token(std::string tok) {
  std::erase_if(tok, [](unsigned char c) { return std::isspace(c); });
  if (tok.empty()) throw ctqw::contract_error("empty amplitude token");
  const bool has_i = tok.back() == 'i' || tok.back() == 'I';
  if (has_i) tok.pop_back();
  if (!has_i) return {parse_double_full(tok), 0.0};
  size_t split = std::string::npos;
  for (size_t p = tok.size(); p-- > 1;) {
    const char c = tok[p];
    if ((c == '+' || c == '-') && tok[p - 1] != 'e' && tok[p - 1] != 'E') {
      split = p;
      break;
    }
  }
  std::string re_s, im_s;
  if (split == std::string::npos) {
    im_s = tok;
  } else {
    re_s = tok.substr(0, split);
    im_s = tok.substr(split);
  }
  const double re = re_s.empty() ? 0.0 : parse_double_full(re_s);
  double im = 0.0;
  if (im_s.empty() || im_s == "+") im = 1.0;
  else if (im_s == "-") im = -1.0;
  else im = parse_double_full(im_s);
  return {re, im};
}

// vertex index | "uniform" | comma-separated amplitudes (normalized on ingest).
Eigen::VectorXcd parse_initial_state(const std::string& spec, int n) {
  if (spec == "uniform") {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Constant(n, 1.0 / std::sqrt(double(n)));
    return psi;
  }
  const bool all_digits = !spec.empty() &&
      std::all_of(spec.begin(), spec.end(), [](unsigned char c) { return std::isdigit(c); });
  if (all_digits) {
    const int v = std::stoi(spec);
    if (v < 0 || v >= n) throw ctqw::contract_error("initial vertex " + spec + " out of range");
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(n);
    psi(v) = 1.0;
    return psi;
  }
  std::vector<std::complex<double>> amps;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) amps.push_back(parse_complex_token(tok));
  if (static_cast<int>(amps.size()) != n)
    throw ctqw::contract_error("amplitude list has " + std::to_string(amps.size()) +
                               " entries for a " + std::to_string(n) + "-vertex graph");
  Eigen::VectorXcd psi(n);
  for (int i = 0; i < n; ++i) psi(i) = amps[i];
  const double nrm = psi.norm();
  if (nrm < 1e-12) throw ctqw::contract_error("initial state has zero norm");
  return psi / nrm;
}

// scalar | start:stop:points (log-spaced, endpoints included).
std::vector<double> parse_lambda_spec(const std::string& spec) {
  const auto c1 = spec.find(':');
  if (c1 == std::string::npos) {
    const double lam = parse_double_full(spec);
    if (!(lam > 0)) throw ctqw::contract_error("measurement rate must be positive");
    return {lam};
  }
  const auto c2 = spec.find(':', c1 + 1);
  if (c2 == std::string::npos || spec.find(':', c2 + 1) != std::string::npos)
    throw ctqw::contract_error("rate grid must be start:stop:points");
  const double start = parse_double_full(spec.substr(0, c1));
  const double stop = parse_double_full(spec.substr(c1 + 1, c2 - c1 - 1));
  const long points = std::strtol(spec.c_str() + c2 + 1, nullptr, 10);
  if (!(start > 0) || !(stop > start) || points < 2)
    throw ctqw::contract_error("rate grid needs 0 < start < stop and points >= 2");
  std::vector<double> grid(points);
  for (long k = 0; k < points; ++k)
    grid[k] = start * std::pow(stop / start, double(k) / double(points - 1));
  return grid;
}

ctqw::graph::Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ctqw::contract_error("cannot open graph file '" + path + "'");
  try {
    return ctqw::graph::parse_edge_list(in);
  } catch (const ctqw::parse_error& e) {
    throw ctqw::contract_error(path + ": " + e.what());
  }
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw ctqw::contract_error("cannot open output file '" + out_path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hitting-time analysis of measured continuous-time quantum walks"};
  app.require_subcommand(1);

  std::string graph_path, lambda_spec = "1", init_spec, out_path, format = "csv";
  int v_f = 0;
  std::uint64_t seed = 12345;
  long long n_traj = 100000, max_meas = 10000;
  bool want_fit = false;

  auto add_common = [&](CLI::App* sub, bool needs_final) {
    sub->add_option("--graph", graph_path, "edge-list file")->required();
    if (needs_final) sub->add_option("--final", v_f, "final (detected) vertex")->required();
    sub->add_option("--output", out_path, "output path (default: stdout)");
    return sub;
  };

  auto* hit = add_common(app.add_subcommand("hit", "hitting time and probability"), true);
  hit->add_option("--lambda", lambda_spec, "measurement rate");
  hit->add_option("--init", init_spec, "initial state")->required();

  auto* matrices = add_common(app.add_subcommand("matrices", "hitting-probability and hitting-time matrices"), true);
  matrices->add_option("--lambda", lambda_spec, "measurement rate");

  auto* dark = add_common(app.add_subcommand("dark", "dark-subspace basis"), true);

  auto* sweep = add_common(app.add_subcommand("sweep", "hitting time across measurement rates"), true);
  sweep->add_option("--lambda", lambda_spec, "rate grid start:stop:points")->required();
  sweep->add_option("--init", init_spec, "initial state")->required();
  sweep->add_flag("--fit", want_fit, "fit large/small-rate divergence coefficients");
  sweep->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* simulate = add_common(app.add_subcommand("simulate", "Monte Carlo trajectory estimate"), true);
  simulate->add_option("--lambda", lambda_spec, "measurement rate");
  simulate->add_option("--init", init_spec, "initial state")->required();
  simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--traj", n_traj, "number of trajectories");
  simulate->add_option("--max-meas", max_meas, "measurement budget per trajectory");

  auto* complement = add_common(app.add_subcommand("complement-check", "infinite-hitting detection and witness"), true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const ctqw::graph::Graph g = load_graph(graph_path);
    const Eigen::MatrixXcd h = ctqw::graph::hamiltonian(g).cast<std::complex<double>>();
    if (v_f < 0 || v_f >= g.n)
      throw ctqw::contract_error("final vertex " + std::to_string(v_f) + " out of range");

    if (hit->parsed()) {
      const std::vector<double> lams = parse_lambda_spec(lambda_spec);
      if (lams.size() != 1) throw ctqw::contract_error("hit takes a single rate, not a grid");
      const Eigen::VectorXcd psi = parse_initial_state(init_spec, g.n);
      const Eigen::MatrixXcd rho = psi * psi.adjoint();
      const auto report = ctqw::hitting::hitting_time(h, {v_f, lams[0]}, rho);
      emit(ctqw::io::report_json(report).dump(2) + "\n", out_path);
    } else if (matrices->parsed()) {
      const std::vector<double> lams = parse_lambda_spec(lambda_spec);
      if (lams.size() != 1) throw ctqw::contract_error("matrices takes a single rate, not a grid");
      const auto [prob, time] = ctqw::hitting::hitting_matrices(h, {v_f, lams[0]});
      emit(ctqw::io::matrices_json(prob, time).dump(2) + "\n", out_path);
    } else if (dark->parsed()) {
      const auto s = ctqw::spectral::eigendecompose(h);
      emit(ctqw::io::dark_json(ctqw::hitting::dark_subspace(s, v_f)).dump(2) + "\n", out_path);
    } else if (sweep->parsed()) {
      const std::vector<double> grid = parse_lambda_spec(lambda_spec);
      const Eigen::VectorXcd psi = parse_initial_state(init_spec, g.n);
      const Eigen::MatrixXcd rho = psi * psi.adjoint();
      const auto rows = ctqw::hitting::lambda_sweep(h, v_f, rho, grid);
      std::optional<ctqw::hitting::AsymptoticFit> fit;
      if (want_fit) fit = ctqw::hitting::fit_asymptotics(rows);
      if (format == "json") {
        emit(ctqw::io::sweep_json(rows, fit).dump(2) + "\n", out_path);
      } else {
        std::ostringstream os;
        ctqw::io::write_sweep_csv(os, rows, fit);
        emit(os.str(), out_path);
      }
    } else if (simulate->parsed()) {
      const std::vector<double> lams = parse_lambda_spec(lambda_spec);
      if (lams.size() != 1) throw ctqw::contract_error("simulate takes a single rate, not a grid");
      const Eigen::VectorXcd psi = parse_initial_state(init_spec, g.n);
      const auto s = ctqw::spectral::eigendecompose(h);
      const auto stats =
          ctqw::trajectory::mc_estimate(s, {v_f, lams[0]}, psi, n_traj, max_meas, seed);
      emit(ctqw::io::mc_json(stats).dump(2) + "\n", out_path);
    } else if (complement->parsed()) {
      const auto report = ctqw::hitting::detect_infinite(g, v_f);
      emit(ctqw::io::infinite_json(report).dump(2) + "\n", out_path);
    }
  } catch (const ctqw::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const ctqw::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
