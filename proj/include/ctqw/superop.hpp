#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <vector>

#define LAPACK_COMPLEX_CPP
#include <lapacke.h>

#include "ctqw/errors.hpp"
#include "ctqw/spectral.hpp"

namespace ctqw::superop {

// Dense matrix of a linear map on n x n operators under row-major
// vectorization: vec(X)[n*r + c] = X(r,c). Under this convention the map
// X -> A X B^dagger has matrix kron(A, conj(B)), and the Hilbert-Schmidt
// adjoint is the conjugate transpose of the matrix.
struct Superoperator {
  Eigen::MatrixXcd m;  // order n^2
  int n = 0;           // underlying Hilbert-space dimension
};

// Poisson-timed projective measurement of one vertex: P_f = |v_f><v_f|,
// Q_f = I - P_f, measurement events at rate lambda.
struct MeasurementSetup {
  int v_f = 0;
  double lambda = 1.0;
};

inline Eigen::VectorXcd vectorize(const Eigen::MatrixXcd& x) {
  if (x.rows() != x.cols()) throw contract_error("vectorize needs a square matrix");
  const int n = static_cast<int>(x.rows());
  Eigen::VectorXcd v(n * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) v(n * r + c) = x(r, c);
  return v;
}

inline Eigen::MatrixXcd devectorize(const Eigen::VectorXcd& v) {
  const int n = static_cast<int>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (static_cast<long long>(n) * n != v.size())
    throw contract_error("vector length is not a perfect square");
  Eigen::MatrixXcd x(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) x(r, c) = v(n * r + c);
  return x;
}

// Matrix of L(X) = X + (i/lambda)[H, X]:  I(x)I + (i/lambda)(H(x)I - I(x)H*).
// L is normal with eigenvalues 1 + i(E_j - E_k)/lambda, so every singular
// value is >= 1 and L is always invertible.
inline Superoperator build_L(const Eigen::MatrixXcd& h, double lambda) {
  if (!spectral::is_hermitian(h)) throw contract_error("Hamiltonian must be Hermitian");
  if (!(lambda > 0) || !std::isfinite(lambda))
    throw contract_error("measurement rate must be positive and finite");
  const int n = static_cast<int>(h.rows());
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  const std::complex<double> ilam(0.0, 1.0 / lambda);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(n * n, n * n);
  m += ilam * (Eigen::kroneckerProduct(h, id) - Eigen::kroneckerProduct(id, h.conjugate())).eval();
  return Superoperator{std::move(m), n};
}

// Pencil N = L - Q_f-conjugation: L.m - kron(Q_f, conj(Q_f)). Singular (for
// every lambda) exactly when a dark state exists.
inline Superoperator build_N(const Eigen::MatrixXcd& h, const MeasurementSetup& setup) {
  const int n = static_cast<int>(h.rows());
  if (setup.v_f < 0 || setup.v_f >= n) throw contract_error("final vertex out of range");
  Superoperator l = build_L(h, setup.lambda);
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Identity(n, n);
  q(setup.v_f, setup.v_f) = 0.0;
  l.m -= Eigen::kroneckerProduct(q, q.conjugate()).eval();
  return l;
}

// Adjoint with respect to <X,Y> = Tr(X^dagger Y).
inline Superoperator hs_adjoint(const Superoperator& s) {
  return Superoperator{s.m.adjoint(), s.n};
}

// SVD-backed solver: factors once, applies the (pseudo)inverse many times.
// Singular values below rank_tol * sigma_max are treated as zero; the flag
// records whether any were.
class PinvSolver {
 public:
  PinvSolver(const Eigen::MatrixXcd& m, double rank_tol) {
    if (!(rank_tol > 0)) throw contract_error("rank tolerance must be > 0");
    if (m.rows() != m.cols()) throw contract_error("solver needs a square matrix");
    // Jacobi is the accuracy anchor at desk scale; BDC for larger orders.
    if (m.rows() <= 96) {
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
      u_ = svd.matrixU();
      v_ = svd.matrixV();
      sv_ = svd.singularValues();
    } else {
      Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
      u_ = svd.matrixU();
      v_ = svd.matrixV();
      sv_ = svd.singularValues();
    }
    sigma_max_ = sv_.size() ? sv_(0) : 0.0;
    sigma_min_ = sv_.size() ? sv_(sv_.size() - 1) : 0.0;
    inv_sv_.resize(sv_.size());
    const double cut = rank_tol * sigma_max_;
    singular_ = false;
    for (Eigen::Index i = 0; i < sv_.size(); ++i) {
      if (sv_(i) > cut) {
        inv_sv_(i) = 1.0 / sv_(i);
      } else {
        inv_sv_(i) = 0.0;
        singular_ = true;
      }
    }
  }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& b) const {
    if (b.size() != u_.rows()) throw contract_error("right-hand side dimension mismatch");
    return v_ * (inv_sv_.cast<std::complex<double>>().asDiagonal() * (u_.adjoint() * b));
  }

  bool singular() const { return singular_; }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }

 private:
  Eigen::MatrixXcd u_, v_;
  Eigen::VectorXd sv_, inv_sv_;
  double sigma_min_ = 0.0, sigma_max_ = 0.0;
  bool singular_ = false;
};

struct SolveResult {
  Eigen::VectorXcd x;
  bool was_singular = false;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

// Exact solve when the matrix is numerically regular, Moore-Penrose
// least-squares solution otherwise.
inline SolveResult solve_or_pinv(const Superoperator& s, const Eigen::VectorXcd& b,
                                 double rank_tol = 1e-9) {
  PinvSolver solver(s.m, rank_tol);
  return SolveResult{solver.apply(b), solver.singular(), solver.sigma_min(),
                     solver.sigma_max()};
}

// e^{S t} v by dense scaling-and-squaring. The caller folds sign and rate into
// S (conditional evolution uses S = -lambda * N).
inline Eigen::VectorXcd superop_expm_apply(const Superoperator& s, const Eigen::VectorXcd& v,
                                           double t) {
  if (t < 0) throw contract_error("time must be nonnegative");
  if (v.size() != s.m.rows()) throw contract_error("vector dimension mismatch");
  if (t == 0.0) return v;
  return (s.m * t).exp() * v;
}

// Finite nonzero rates lambda_0 at which the pencil matrix
// I(x)I - Q(x)Q* + (i/lambda)(H(x)I - I(x)H*) is singular. For measured graph
// walks these all lie on the imaginary axis. Substituting i/lambda_0 = -w
// turns the problem into the REAL pair (A, G), A = I - Q(x)Q,
// G = H(x)I - I(x)H: real QZ keeps genuine roots w exactly real, so the
// returned lambda_0 = -i/w sit exactly on the axis instead of inheriting QZ
// rounding in their real parts. Guards: a structurally singular pencil (dark
// subspace present, determinant identically zero) has no isolated eigenvalues
// and yields an empty list; QZ scatters the w = 0 / w = infinity endpoint
// clusters of multiple roots as far as ~1e-6 from their targets, so candidates
// outside |w| in [1e-4, 1e4] are endpoint artifacts (genuine graph-walk roots
// sit at |w| of order one); surviving candidates must verify as actual
// singularities of A - wG.
inline std::vector<std::complex<double>> pencil_eigenvalues(const Eigen::MatrixXcd& h, int v_f) {
  if (!spectral::is_hermitian(h)) throw contract_error("Hamiltonian must be Hermitian");
  if (h.imag().cwiseAbs().maxCoeff() > 1e-12)
    throw contract_error("pencil scan needs a real symmetric Hamiltonian");
  const int n = static_cast<int>(h.rows());
  if (v_f < 0 || v_f >= n) throw contract_error("final vertex out of range");
  const Eigen::MatrixXd hr = h.real();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd q = id;
  q(v_f, v_f) = 0.0;
  const Eigen::MatrixXd a0 = Eigen::MatrixXd::Identity(n * n, n * n) -
                             Eigen::kroneckerProduct(q, q);
  const Eigen::MatrixXd g0 = (Eigen::kroneckerProduct(hr, id) - Eigen::kroneckerProduct(id, hr)).eval();

  // Structural singularity probe: the real rate 1 is never an isolated root,
  // so sigma_min(A + iG) vanishes only when the determinant does identically.
  {
    Eigen::MatrixXcd n1 = a0.cast<std::complex<double>>() +
                          std::complex<double>(0.0, 1.0) * g0.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(n1);
    if (svd.singularValues().minCoeff() <= 1e-9 * svd.singularValues().maxCoeff()) return {};
  }

  Eigen::MatrixXd a = a0, g = g0;
  const lapack_int order = n * n;
  std::vector<double> ar(order), ai(order), beta(order);
  lapack_int info = LAPACKE_dggev(LAPACK_COL_MAJOR, 'N', 'N', order, a.data(), order, g.data(),
                                  order, ar.data(), ai.data(), beta.data(), nullptr, 1, nullptr, 1);
  if (info != 0) throw numerical_error("generalized eigenvalue computation failed");

  const double ascale = std::max(1.0, a0.cwiseAbs().maxCoeff());
  const double gscale = std::max(1.0, g0.cwiseAbs().maxCoeff());
  std::vector<std::complex<double>> out;
  for (lapack_int k = 0; k < order; ++k) {
    if (std::abs(beta[k]) <= 1e-12 * gscale) continue;  // w = inf: lambda_0 = 0 endpoint
    const std::complex<double> w(ar[k] / beta[k], ai[k] / beta[k]);
    const double mag = std::abs(w);
    if (mag <= 1e-12 * ascale) continue;                // w = 0: lambda_0 = inf endpoint
    if (mag < 1e-4 || mag > 1e4) continue;              // scattered endpoint cluster
    const Eigen::MatrixXcd m = a0.cast<std::complex<double>>() -
                               w * g0.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    if (svd.singularValues().minCoeff() > 1e-8 * svd.singularValues().maxCoeff())
      continue;                                         // QZ artifact, not a root
    out.push_back(std::complex<double>(0.0, -1.0) / w);
  }
  return out;
}

}  // namespace ctqw::superop
