#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <vector>

#include "ctqw/errors.hpp"

namespace ctqw::spectral {

inline bool is_hermitian(const Eigen::MatrixXcd& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

// Clustered eigendecomposition of a Hermitian matrix. Eigenvalues within the
// cluster tolerance are merged into one entry whose eigenspace is the direct
// sum; sum of projectors is I, sum of E_i P_i reconstructs the input.
struct Spectrum {
  int n = 0;
  std::vector<double> eigenvalues;           // distinct, ascending
  std::vector<int> multiplicities;           // sum to n
  std::vector<Eigen::MatrixXcd> projectors;  // Hermitian idempotents, rank d_i
  std::vector<Eigen::MatrixXcd> bases;       // n x d_i orthonormal columns
};

// cluster_tol is relative to max(1, spectral radius). Raw eigenvalues whose
// adjacent gaps fall below it are merged (value: arithmetic mean of the
// cluster). Default keeps true Laplacian multiplets together at desk scale.
inline Spectrum eigendecompose(const Eigen::MatrixXcd& h, double cluster_tol = 1e-8) {
  if (h.rows() != h.cols()) throw contract_error("matrix must be square");
  if (!is_hermitian(h)) throw contract_error("matrix must be Hermitian");
  if (!(cluster_tol > 0)) throw contract_error("cluster tolerance must be > 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success) throw numerical_error("eigendecomposition failed");
  const Eigen::VectorXd& evals = es.eigenvalues();  // ascending
  const Eigen::MatrixXcd& evecs = es.eigenvectors();
  const int n = static_cast<int>(h.rows());
  const double scale = std::max(1.0, evals.cwiseAbs().maxCoeff());

  Spectrum s;
  s.n = n;
  int begin = 0;
  while (begin < n) {
    int end = begin + 1;
    while (end < n && evals(end) - evals(end - 1) <= cluster_tol * scale) ++end;
    const int d = end - begin;
    Eigen::MatrixXcd basis = evecs.middleCols(begin, d);
    s.eigenvalues.push_back(evals.segment(begin, d).mean());
    s.multiplicities.push_back(d);
    s.projectors.push_back(basis * basis.adjoint());
    s.bases.push_back(std::move(basis));
    begin = end;
  }
  return s;
}

// psi(t) = sum_i e^{-i E_i t} P_i psi. Exact for all t (no series expansion),
// norm preserving.
inline Eigen::VectorXcd evolve(const Spectrum& s, const Eigen::VectorXcd& psi, double t) {
  if (psi.size() != s.n) throw contract_error("state dimension mismatch");
  if (std::abs(psi.norm() - 1.0) > 1e-8) throw contract_error("state must be normalized");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(s.n);
  for (size_t i = 0; i < s.eigenvalues.size(); ++i) {
    const std::complex<double> phase = std::exp(std::complex<double>(0.0, -s.eigenvalues[i] * t));
    out.noalias() += phase * (s.bases[i] * (s.bases[i].adjoint() * psi));
  }
  return out;
}

// Dense unitary e^{-iHt} assembled from the spectrum; used where repeated
// application at a fixed step is cheaper than per-state spectral sums.
inline Eigen::MatrixXcd propagator(const Spectrum& s, double t) {
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(s.n, s.n);
  for (size_t i = 0; i < s.eigenvalues.size(); ++i)
    u += std::exp(std::complex<double>(0.0, -s.eigenvalues[i] * t)) * s.projectors[i];
  return u;
}

}  // namespace ctqw::spectral
