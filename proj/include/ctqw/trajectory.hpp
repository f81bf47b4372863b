#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "ctqw/errors.hpp"
#include "ctqw/spectral.hpp"
#include "ctqw/superop.hpp"

namespace ctqw::trajectory {

struct TrajectoryStats {
  double p_h_hat = 0.0;
  double p_h_stderr = 0.0;
  double tau_h_hat = 0.0;
  double tau_h_stderr = 0.0;
  long long n_traj = 0;
  double truncated_fraction = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent per-trajectory stream: scheduling-free reproducibility.
inline std::uint64_t stream_seed(std::uint64_t seed, long long traj_index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(traj_index) + 1));
}

// Order-independent compensated accumulator.
struct KahanSum {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

}  // namespace detail

// Direct simulation of the measured walk: exponential(lambda) interarrival
// times, unitary evolution between events, detection with probability
// |<v_f|psi>|^2 at each event, survival projects out v_f and renormalizes.
// Trajectories that exhaust max_meas count as non-hits contributing 0 to the
// time estimator (the unnormalized expectation over all trajectories), so the
// estimator biases low by an amount bounded via truncated_fraction.
inline TrajectoryStats mc_estimate(const spectral::Spectrum& s,
                                   const superop::MeasurementSetup& setup,
                                   const Eigen::VectorXcd& psi_i, long long n_traj,
                                   long long max_meas, std::uint64_t seed) {
  if (n_traj < 1) throw contract_error("need at least one trajectory");
  if (max_meas < 1) throw contract_error("need at least one measurement");
  if (psi_i.size() != s.n) throw contract_error("state dimension mismatch");
  if (std::abs(psi_i.norm() - 1.0) > 1e-8) throw contract_error("state must be normalized");
  if (setup.v_f < 0 || setup.v_f >= s.n) throw contract_error("final vertex out of range");
  if (!(setup.lambda > 0)) throw contract_error("measurement rate must be positive");

  // Flattened eigenbasis: one pair of gemvs per step instead of per-cluster sums.
  const int n = s.n;
  Eigen::MatrixXcd v(n, n);
  Eigen::VectorXd evals(n);
  {
    int col = 0;
    for (size_t i = 0; i < s.bases.size(); ++i)
      for (int c = 0; c < s.bases[i].cols(); ++c) {
        v.col(col) = s.bases[i].col(c);
        evals(col) = s.eigenvalues[i];
        ++col;
      }
    if (col != n) throw contract_error("spectrum does not span the space");
  }
  const int f = setup.v_f;

  detail::KahanSum sum_t, sum_t2;
  long long hits = 0, truncated = 0;
  Eigen::VectorXcd psi(n), coeff(n);
  for (long long k = 0; k < n_traj; ++k) {
    std::mt19937_64 rng(detail::stream_seed(seed, k));
    std::exponential_distribution<double> interarrival(setup.lambda);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    psi = psi_i;
    double t = 0.0;
    bool hit = false;
    double t_hit = 0.0;
    for (long long m = 0; m < max_meas; ++m) {
      const double dt = interarrival(rng);
      t += dt;
      coeff.noalias() = v.adjoint() * psi;
      for (int j = 0; j < n; ++j)
        coeff(j) *= std::exp(std::complex<double>(0.0, -evals(j) * dt));
      psi.noalias() = v * coeff;
      const double p = std::min(1.0, std::norm(psi(f)));
      if (coin(rng) < p) {
        hit = true;
        t_hit = t;
        break;
      }
      psi(f) = 0.0;
      const double nrm = psi.norm();
      if (nrm < 1e-12) {  // survival branch had probability ~0; it was a hit
        hit = true;
        t_hit = t;
        break;
      }
      psi /= nrm;
    }
    if (hit) {
      ++hits;
      sum_t.add(t_hit);
      sum_t2.add(t_hit * t_hit);
    } else {
      ++truncated;
    }
  }

  TrajectoryStats st;
  st.n_traj = n_traj;
  st.seed = seed;
  const double nd = static_cast<double>(n_traj);
  st.p_h_hat = static_cast<double>(hits) / nd;
  st.p_h_stderr = std::sqrt(std::max(0.0, st.p_h_hat * (1.0 - st.p_h_hat)) / nd);
  st.tau_h_hat = sum_t.sum / nd;  // misses contribute 0
  if (n_traj > 1) {
    const double var = std::max(0.0, (sum_t2.sum - nd * st.tau_h_hat * st.tau_h_hat) / (nd - 1.0));
    st.tau_h_stderr = std::sqrt(var / nd);
  }
  st.truncated_fraction = static_cast<double>(truncated) / nd;
  return st;
}

struct MasterEquationResult {
  double p_h = 0.0;
  double tau_h = 0.0;
  // Estimated magnitude of the dropped t > t_max tail of the time integral,
  // from the slowest decaying (non-dark) mode.
  double tail_bound = 0.0;
};

namespace detail {

// Slowest nonzero decay rate of the conditional evolution generator: the
// smallest strictly positive real part among the eigenvalues of N. Dark modes
// sit at zero and are excluded.
inline double slowest_rate(const Eigen::MatrixXcd& n_matrix) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(n_matrix, false);
  if (es.info() != Eigen::Success) throw numerical_error("pencil eigendecomposition failed");
  double g = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double re = es.eigenvalues()(i).real();
    if (re > 1e-9 && re < g) g = re;
  }
  return g;  // +inf when every mode is dark
}

}  // namespace detail

// Horizon rule: the conditional evolution decays like e^{-lambda g t} off the
// dark subspace, so 20/(lambda g) bounds the tail near 2e-9 of its initial
// weight; 50/lambda when no decaying mode can be identified.
inline double default_t_max(const Eigen::MatrixXcd& h, const superop::MeasurementSetup& setup) {
  const double g = detail::slowest_rate(superop::build_N(h, setup).m);
  if (!std::isfinite(g)) return 50.0 / setup.lambda;
  return 20.0 / (setup.lambda * g);
}

// Samples of the detected-vertex population Tr{P_f rho^c(k dt)} of the
// conditional (no-detection) evolution rho^c(t) = e^{-lambda N t}(rho),
// k = 0 .. n_points-1. One dense exponential, then repeated matvec.
inline std::vector<double> conditional_population_curve(const Eigen::MatrixXcd& h,
                                                        const superop::MeasurementSetup& setup,
                                                        const Eigen::MatrixXcd& rho, double dt,
                                                        int n_points) {
  if (!(dt > 0)) throw contract_error("step must be positive");
  if (n_points < 1) throw contract_error("need at least one sample");
  superop::Superoperator n_op = superop::build_N(h, setup);
  const Eigen::MatrixXcd step = (-setup.lambda * dt * n_op.m).exp();
  const int n = n_op.n;
  const int f = setup.v_f;
  Eigen::VectorXcd x = superop::vectorize(rho);
  std::vector<double> out(n_points);
  for (int k = 0; k < n_points; ++k) {
    out[k] = x(n * f + f).real();
    if (k + 1 < n_points) x = step * x;
  }
  return out;
}

// Quadrature of p_h = lambda * int Tr{P_f rho^c} dt and
// tau_h = lambda * int t Tr{P_f rho^c} dt over [0, t_max] by composite
// Simpson on a uniform grid (n_steps rounded up to even).
inline MasterEquationResult master_equation_estimate(const Eigen::MatrixXcd& h,
                                                     const superop::MeasurementSetup& setup,
                                                     const Eigen::MatrixXcd& rho, double t_max,
                                                     long long n_steps) {
  if (!(t_max > 0)) throw contract_error("integration horizon must be positive");
  if (n_steps < 2) throw contract_error("need at least two steps");
  const long long steps = (n_steps % 2 == 0) ? n_steps : n_steps + 1;
  const double dt = t_max / static_cast<double>(steps);

  superop::Superoperator n_op = superop::build_N(h, setup);
  const Eigen::MatrixXcd step = (-setup.lambda * dt * n_op.m).exp();
  const int n = n_op.n;
  const int f = setup.v_f;
  Eigen::VectorXcd x = superop::vectorize(rho);

  detail::KahanSum int_g, int_tg;
  double g_end = 0.0;
  for (long long k = 0; k <= steps; ++k) {
    const double g = x(n * f + f).real();
    const double t = dt * static_cast<double>(k);
    const double w = (k == 0 || k == steps) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    int_g.add(w * g);
    int_tg.add(w * t * g);
    if (k == steps) g_end = g;
    else x = step * x;
  }

  MasterEquationResult r;
  r.p_h = setup.lambda * int_g.sum * dt / 3.0;
  r.tau_h = setup.lambda * int_tg.sum * dt / 3.0;
  const double rate = detail::slowest_rate(n_op.m);
  if (std::isfinite(rate)) {
    // g(t) <= g(t_max) e^{-lambda rate (t - t_max)} beyond the horizon.
    r.tail_bound = setup.lambda * std::abs(g_end) * (t_max / (setup.lambda * rate) +
                                                     1.0 / (setup.lambda * rate * setup.lambda * rate));
  } else {
    r.tail_bound = std::abs(g_end) > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return r;
}

struct WeakCurve {
  std::vector<double> t;
  std::vector<double> population;  // Tr{P_f rho^c(t)}
};

// Discrete weak-measurement recursion whose continuum limit is the
// conditional master equation: per step of length dt,
//   rho <- M0 rho M0^dagger + (eps Q_f) rho (eps Q_f)^dagger,
// M0 = sqrt(1 - eps^2) e^{-i dt H}, conditioned on no detection at v_f.
// Converges to the conditional_population_curve as eps -> 0 at fixed
// lambda = eps^2 / dt (first order in eps).
inline WeakCurve weak_limit_check(const Eigen::MatrixXcd& h, const superop::MeasurementSetup& setup,
                                  const Eigen::VectorXcd& psi_i, double eps, double dt,
                                  double horizon) {
  if (!(eps > 0) || eps > 0.1) throw contract_error("weak-measurement strength must be in (0, 0.1]");
  if (!(dt > 0)) throw contract_error("step must be positive");
  if (std::abs(eps * eps / dt - setup.lambda) > 0.01 * setup.lambda)
    throw contract_error("eps^2/dt must equal the measurement rate within 1%");
  if (!(horizon > 0)) throw contract_error("horizon must be positive");
  if (std::abs(psi_i.norm() - 1.0) > 1e-8) throw contract_error("state must be normalized");
  const int n = static_cast<int>(h.rows());
  if (setup.v_f < 0 || setup.v_f >= n) throw contract_error("final vertex out of range");

  spectral::Spectrum s = spectral::eigendecompose(h);
  const Eigen::MatrixXcd m0 = std::sqrt(1.0 - eps * eps) * spectral::propagator(s, dt);
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Identity(n, n);
  q(setup.v_f, setup.v_f) = 0.0;

  Eigen::MatrixXcd rho = psi_i * psi_i.adjoint();
  WeakCurve curve;
  const long long k_max = static_cast<long long>(std::floor(horizon / dt));
  curve.t.reserve(k_max + 1);
  curve.population.reserve(k_max + 1);
  for (long long k = 0; k <= k_max; ++k) {
    curve.t.push_back(dt * static_cast<double>(k));
    curve.population.push_back(rho(setup.v_f, setup.v_f).real());
    if (k < k_max)
      rho = (m0 * rho * m0.adjoint() + (eps * eps) * (q * rho * q.adjoint())).eval();
  }
  return curve;
}

}  // namespace ctqw::trajectory
