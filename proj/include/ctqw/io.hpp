#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "ctqw/hitting.hpp"
#include "ctqw/trajectory.hpp"

namespace ctqw::io {

// Complex scalars serialize as [re, im]; matrices as row-major nested arrays.
inline nlohmann::json to_json(const std::complex<double>& z) {
  return nlohmann::json::array({z.real(), z.imag()});
}

inline nlohmann::json to_json(const Eigen::VectorXcd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(to_json(v(i)));
  return a;
}

inline nlohmann::json to_json(const Eigen::MatrixXcd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json report_json(const hitting::HittingReport& r) {
  nlohmann::json j;
  j["tau_h"] = r.infinite ? nlohmann::json("inf") : nlohmann::json(r.tau_h);
  j["infinite"] = r.infinite;
  j["p_h"] = r.p_h;
  j["pencil_sigma_min"] = r.pencil_sigma_min;
  j["dark_dim"] = r.dark_dim;
  j["lambda"] = r.lambda;
  if (r.infinite) j["tau_conditional"] = r.tau_conditional;
  return j;
}

inline nlohmann::json matrices_json(const Eigen::MatrixXcd& prob, const Eigen::MatrixXcd& time) {
  nlohmann::json j;
  j["hit_probability_matrix"] = to_json(prob);
  j["hit_time_matrix"] = to_json(time);
  return j;
}

inline nlohmann::json dark_json(const hitting::DarkSubspace& d) {
  nlohmann::json j;
  j["dimension"] = d.dim();
  nlohmann::json basis = nlohmann::json::array();
  for (const auto& b : d.basis) basis.push_back(to_json(b));
  j["basis"] = basis;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [ev, dim] : d.per_eigenvalue_dims)
    per.push_back({{"eigenvalue", ev}, {"dimension", dim}});
  j["per_eigenvalue"] = per;
  return j;
}

inline nlohmann::json infinite_json(const hitting::InfiniteReport& r) {
  nlohmann::json j;
  j["has_infinite"] = r.has_infinite;
  j["by_dark_subspace"] = r.by_dark_subspace;
  j["by_pencil_sigma"] = r.by_pencil_sigma;
  j["by_complement"] = r.by_complement;
  j["witness"] = r.witness ? to_json(*r.witness) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json mc_json(const trajectory::TrajectoryStats& st) {
  nlohmann::json j;
  j["p_h_hat"] = st.p_h_hat;
  j["p_h_stderr"] = st.p_h_stderr;
  j["tau_h_hat"] = st.tau_h_hat;
  j["tau_h_stderr"] = st.tau_h_stderr;
  j["n_traj"] = st.n_traj;
  j["truncated_fraction"] = st.truncated_fraction;
  j["seed"] = st.seed;
  return j;
}

namespace detail {

inline std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

}  // namespace detail

// CSV with header "lambda,tau_h,p_h"; infinite times print as "inf". When a
// fit is supplied, two comment lines carry the large- and small-rate
// coefficients of tau_h ~ c1 * lambda + c2 / lambda.
inline void write_sweep_csv(std::ostream& os, const std::vector<hitting::HittingReport>& sweep,
                            const std::optional<hitting::AsymptoticFit>& fit = std::nullopt) {
  os << "lambda,tau_h,p_h\n";
  for (const auto& r : sweep) {
    os << detail::format_double(r.lambda) << ','
       << (r.infinite ? "inf" : detail::format_double(r.tau_h)) << ','
       << detail::format_double(r.p_h) << '\n';
  }
  if (fit) {
    os << "# tau_coeff_lambda," << detail::format_double(fit->lambda_coeff) << '\n';
    os << "# tau_coeff_inv_lambda," << detail::format_double(fit->inv_lambda_coeff) << '\n';
  }
}

inline nlohmann::json sweep_json(const std::vector<hitting::HittingReport>& sweep,
                                 const std::optional<hitting::AsymptoticFit>& fit = std::nullopt) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : sweep) rows.push_back(report_json(r));
  nlohmann::json j;
  j["sweep"] = rows;
  if (fit) {
    j["tau_coeff_lambda"] = fit->lambda_coeff;
    j["tau_coeff_inv_lambda"] = fit->inv_lambda_coeff;
  }
  return j;
}

}  // namespace ctqw::io
