#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "ctqw/errors.hpp"
#include "ctqw/graph.hpp"
#include "ctqw/spectral.hpp"
#include "ctqw/superop.hpp"

namespace ctqw::hitting {

// Relative singular-value cutoff separating genuinely singular pencils from
// conditioning noise. Dark-state singular values are exactly zero in exact
// arithmetic; desk-scale Laplacian conditioning keeps true minima far above.
constexpr double kRankTol = 1e-9;

struct HittingReport {
  double tau_h = 0.0;  // +infinity when the walk can miss the vertex forever
  bool infinite = false;
  double p_h = 0.0;
  double pencil_sigma_min = 0.0;  // absolute smallest singular value of N
  int dark_dim = 0;
  double lambda = 0.0;
  // Pseudoinverse value of the time formula. Equals tau_h when finite; when
  // tau_h is infinite this is the conditional (never-diverging) diagnostic.
  double tau_conditional = 0.0;
};

struct DarkSubspace {
  std::vector<Eigen::VectorXcd> basis;  // orthonormal, each an eigenvector
  std::vector<std::pair<double, int>> per_eigenvalue_dims;  // (E_i, dim_i)
  int dim() const { return static_cast<int>(basis.size()); }
};

namespace detail {

inline void validate_density(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != rho.cols()) throw contract_error("invalid initial density matrix: not square");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw contract_error("invalid initial density matrix: not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-10 || std::abs(rho.trace().imag()) > 1e-10)
    throw contract_error("invalid initial density matrix: trace != 1");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw contract_error("invalid initial density matrix: not positive semidefinite");
}

inline std::pair<double, double> sigma_extremes(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& sv = svd.singularValues();
  return {sv(sv.size() - 1), sv(0)};
}

}  // namespace detail

// Per-eigenspace intersection with the final vertex's orthogonal complement:
// for eigenspace basis B (n x d), the dark block is B * null(<v_f| B), of
// dimension d or d-1. States in the union never develop amplitude on v_f.
inline DarkSubspace dark_subspace(const spectral::Spectrum& s, int v_f) {
  if (v_f < 0 || v_f >= s.n) throw contract_error("final vertex out of range");
  DarkSubspace out;
  for (size_t i = 0; i < s.eigenvalues.size(); ++i) {
    const Eigen::MatrixXcd& basis = s.bases[i];
    const int d = static_cast<int>(basis.cols());
    Eigen::RowVectorXcd overlap = basis.row(v_f);
    Eigen::MatrixXcd dark_block;
    if (overlap.norm() <= 1e-9) {
      dark_block = basis;  // the whole eigenspace avoids v_f
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(overlap, Eigen::ComputeFullV);
      dark_block = basis * svd.matrixV().rightCols(d - 1);
    }
    const int dim = static_cast<int>(dark_block.cols());
    out.per_eigenvalue_dims.emplace_back(s.eigenvalues[i], dim);
    for (int c = 0; c < dim; ++c) {
      Eigen::VectorXcd b = dark_block.col(c);
      // Canonical phase: first nonzero component real positive, so the basis
      // does not depend on solver sign conventions.
      for (Eigen::Index r = 0; r < b.size(); ++r) {
        if (std::abs(b(r)) > 1e-12) {
          b *= std::conj(b(r)) / std::abs(b(r));
          break;
        }
      }
      out.basis.push_back(std::move(b));
    }
  }
  return out;
}

inline Eigen::MatrixXcd dark_projector(const DarkSubspace& d, int n) {
  Eigen::MatrixXcd pi = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& b : d.basis) pi += b * b.adjoint();
  return pi;
}

namespace detail {

inline HittingReport hitting_time_impl(const Eigen::MatrixXcd& h,
                                       const superop::MeasurementSetup& setup,
                                       const Eigen::MatrixXcd& rho, double rank_tol,
                                       int dark_dim) {
  const int f = setup.v_f;
  superop::Superoperator n_op = superop::build_N(h, setup);
  superop::PinvSolver solver(n_op.m, rank_tol);
  const Eigen::VectorXcd x = solver.apply(superop::vectorize(rho));
  const Eigen::VectorXcd y = solver.apply(x);
  const int n = n_op.n;
  const std::complex<double> p_raw = x(n * f + f);
  const std::complex<double> t_raw = y(n * f + f) / setup.lambda;

  // Imaginary parts are roundoff residues; their size scales with the value
  // once the pseudoinverse acts at extreme rates, so the gates are relative.
  if (std::abs(p_raw.imag()) > 1e-9 * std::max(1.0, std::abs(p_raw)))
    throw numerical_error("hitting probability has a non-real residue");
  const double p_h = p_raw.real();
  if (p_h < -1e-9 || p_h > 1.0 + 1e-9)
    throw numerical_error("hitting probability outside [0, 1]");

  HittingReport r;
  r.p_h = p_h;
  r.lambda = setup.lambda;
  r.pencil_sigma_min = solver.sigma_min();
  r.dark_dim = dark_dim;
  r.tau_conditional = t_raw.real();
  r.infinite = solver.singular() && p_h < 1.0 - 1e-8;
  if (r.infinite) {
    r.tau_h = std::numeric_limits<double>::infinity();
  } else {
    const double t_scale = std::max(1.0, std::abs(t_raw));
    if (std::abs(t_raw.imag()) > 1e-9 * t_scale)
      throw numerical_error("hitting time has a non-real residue");
    if (t_raw.real() < -1e-9 * t_scale) throw numerical_error("hitting time is negative");
    r.tau_h = t_raw.real();
  }
  return r;
}

}  // namespace detail

// Expected first-detection time and total detection probability for the walk
// started in rho under Poisson-timed measurement of v_f:
//   p_h  = Tr{P_f N^-1(rho)},   tau_h = Tr{P_f N^-2(rho)} / lambda,
// with N the pencil from build_N and Moore-Penrose pseudoinverses when it is
// singular. tau_h is +infinity exactly when p_h < 1 - 1e-8 (some probability
// never arrives); a singular pencil with p_h = 1 still yields the finite
// pseudoinverse time.
inline HittingReport hitting_time(const Eigen::MatrixXcd& h, const superop::MeasurementSetup& setup,
                                  const Eigen::MatrixXcd& rho, double rank_tol = kRankTol) {
  detail::validate_density(rho);
  if (rho.rows() != h.rows()) throw contract_error("density matrix dimension mismatch");
  const int dark = dark_subspace(spectral::eigendecompose(h), setup.v_f).dim();
  return detail::hitting_time_impl(h, setup, rho, rank_tol, dark);
}

// State-independent expectation matrices: p_h(rho) = Tr{P rho} and
// tau_h(rho) = Tr{H rho} for every initial rho (the time only when finite).
// Computed by applying the pseudoinverse of the Hilbert-Schmidt adjoint of N
// to P_f, twice for the time matrix. Both results are Hermitian.
inline std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> hitting_matrices(
    const Eigen::MatrixXcd& h, const superop::MeasurementSetup& setup,
    double rank_tol = kRankTol) {
  superop::Superoperator n_op = superop::build_N(h, setup);
  superop::PinvSolver solver(n_op.m.adjoint(), rank_tol);
  const int n = n_op.n;
  Eigen::MatrixXcd p_f = Eigen::MatrixXcd::Zero(n, n);
  p_f(setup.v_f, setup.v_f) = 1.0;
  const Eigen::VectorXcd z = solver.apply(superop::vectorize(p_f));
  const Eigen::VectorXcd w = solver.apply(z);
  // Both matrices represent real-valued expectations, so they are Hermitian
  // exactly; projecting out the roundoff drift of the two solves keeps them so.
  const Eigen::MatrixXcd p_m = superop::devectorize(z);
  const Eigen::MatrixXcd t_m = superop::devectorize(w) / setup.lambda;
  return {0.5 * (p_m + p_m.adjoint()), 0.5 * (t_m + t_m.adjoint())};
}

struct InfiniteReport {
  bool has_infinite = false;
  std::optional<Eigen::VectorXcd> witness;  // a dark-basis vector when available
  bool by_dark_subspace = false;            // (a) dark dimension > 0
  bool by_pencil_sigma = false;             // (b) sigma_min(N at lambda=1) below cutoff
  bool by_complement = false;               // (c) disconnected-complement witness exists
};

// Three independent detectors of infinite hitting times. (a) and (b) are
// equivalent in exact arithmetic and must agree; (b) is probed at lambda = 1
// and confirmed at 0.7 and 1.3 (pencil singularity is lambda-independent).
// (c) is sufficient but not necessary; it is reported false for disconnected
// graphs, whose complement construction has no premise to stand on.
inline InfiniteReport detect_infinite(const graph::Graph& g, int v_f,
                                      double rank_tol = kRankTol) {
  const Eigen::MatrixXcd h = graph::hamiltonian(g).cast<std::complex<double>>();
  spectral::Spectrum s = spectral::eigendecompose(h);
  DarkSubspace dark = dark_subspace(s, v_f);

  InfiniteReport r;
  r.by_dark_subspace = dark.dim() > 0;

  bool primary = false;
  bool first = true;
  for (double lam : {1.0, 0.7, 1.3}) {
    auto [smin, smax] = detail::sigma_extremes(superop::build_N(h, {v_f, lam}).m);
    const bool singular = smin <= rank_tol * smax;
    if (first) {
      primary = singular;
      first = false;
    } else if (singular != primary) {
      throw numerical_error("pencil singularity probes disagree across rates");
    }
  }
  r.by_pencil_sigma = primary;
  if (r.by_dark_subspace != r.by_pencil_sigma)
    throw numerical_error("dark-subspace and pencil singularity criteria disagree");

  r.by_complement = graph::is_connected(g) && graph::complement_witness(g, v_f).has_value();
  r.has_infinite = r.by_dark_subspace;
  if (dark.dim() > 0) r.witness = dark.basis.front();
  return r;
}

// One report per rate; the grid must be positive and ascending, results come
// back in the same order. The spectrum (and dark dimension) is rate
// independent and computed once.
inline std::vector<HittingReport> lambda_sweep(const Eigen::MatrixXcd& h, int v_f,
                                               const Eigen::MatrixXcd& rho,
                                               const std::vector<double>& grid,
                                               double rank_tol = kRankTol) {
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0)) throw contract_error("sweep rates must be positive");
    if (i > 0 && grid[i] <= grid[i - 1]) throw contract_error("sweep rates must be ascending");
  }
  std::vector<HittingReport> out;
  if (grid.empty()) return out;
  detail::validate_density(rho);
  if (rho.rows() != h.rows()) throw contract_error("density matrix dimension mismatch");
  const int dark = dark_subspace(spectral::eigendecompose(h), v_f).dim();
  out.reserve(grid.size());
  for (double lam : grid)
    out.push_back(detail::hitting_time_impl(h, {v_f, lam}, rho, rank_tol, dark));
  return out;
}

struct AsymptoticFit {
  double lambda_coeff = 0.0;      // coefficient of lambda (measurement-freeze divergence)
  double inv_lambda_coeff = 0.0;  // coefficient of 1/lambda (rare-measurement divergence)
};

// tau_h grows as lambda_coeff * lambda + inv_lambda_coeff / lambda at the two
// divergent ends. The sweep must reach lambda <= 0.01 and lambda >= 100 and
// contain no infinite times.
inline AsymptoticFit fit_asymptotics(const std::vector<HittingReport>& sweep) {
  if (sweep.empty()) throw contract_error("fit needs a non-empty sweep");
  for (const auto& r : sweep)
    if (r.infinite) throw contract_error("fit undefined for infinite hitting times");
  const auto& lo = sweep.front();
  const auto& hi = sweep.back();
  if (lo.lambda > 0.01 || hi.lambda < 100.0)
    throw contract_error("fit needs rates spanning [<=0.01, >=100]");
  return AsymptoticFit{hi.tau_h / hi.lambda, lo.lambda * lo.tau_h};
}

}  // namespace ctqw::hitting
