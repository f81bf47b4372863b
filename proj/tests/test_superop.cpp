#include <catch2/catch_amalgamated.hpp>

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include "ctqw/graph.hpp"
#include "ctqw/superop.hpp"
#include "test_helpers.hpp"

using namespace ctqw;
using Catch::Approx;
using cd = std::complex<double>;

namespace {
Eigen::MatrixXcd hamiltonian_of(const graph::Graph& g) {
  return graph::hamiltonian(g).cast<cd>();
}

Eigen::MatrixXcd random_complex(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = cd(gauss(rng), gauss(rng));
  return a;
}
}  // namespace

TEST_CASE("vectorize is row-major and invertible") {
  Eigen::MatrixXcd x(2, 2);
  x << cd(1, 0), cd(2, 0), cd(3, 0), cd(4, 0);
  Eigen::VectorXcd v = superop::vectorize(x);
  CHECK(v(0) == cd(1, 0));
  CHECK(v(1) == cd(2, 0));
  CHECK(v(2) == cd(3, 0));
  CHECK(v(3) == cd(4, 0));

  Eigen::VectorXcd id3 = superop::vectorize(Eigen::MatrixXcd::Identity(3, 3));
  for (int k = 0; k < 9; ++k) CHECK(id3(k) == (k % 4 == 0 ? cd(1, 0) : cd(0, 0)));

  std::mt19937_64 rng(3);
  Eigen::MatrixXcd r = random_complex(rng, 4);
  CHECK(helpers::max_abs_diff(superop::devectorize(superop::vectorize(r)), r) == 0.0);

  CHECK_THROWS_AS(superop::vectorize(Eigen::MatrixXcd::Zero(2, 3)), contract_error);
  CHECK_THROWS_AS(superop::devectorize(Eigen::VectorXcd::Zero(5)), contract_error);
}

TEST_CASE("two-sided products have Kronecker matrices under the convention") {
  std::mt19937_64 rng(5);
  const int n = 3;
  Eigen::MatrixXcd a = random_complex(rng, n), b = random_complex(rng, n),
                   x = random_complex(rng, n);
  Eigen::MatrixXcd k = Eigen::kroneckerProduct(a, b.conjugate());
  Eigen::VectorXcd lhs = k * superop::vectorize(x);
  Eigen::VectorXcd rhs = superop::vectorize(a * x * b.adjoint());
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
}

TEST_CASE("build_L basics") {
  CHECK(helpers::max_abs_diff(superop::build_L(Eigen::MatrixXcd::Zero(2, 2), 3.0).m,
                              Eigen::MatrixXcd::Identity(4, 4)) == 0.0);

  auto l = superop::build_L(hamiltonian_of(helpers::k2()), 1.0);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(l.m);
  std::vector<cd> got(es.eigenvalues().data(), es.eigenvalues().data() + 4);
  std::sort(got.begin(), got.end(), [](cd p, cd q) { return p.imag() < q.imag(); });
  CHECK(std::abs(got[0] - cd(1, -2)) <= 1e-10);
  CHECK(std::abs(got[1] - cd(1, 0)) <= 1e-10);
  CHECK(std::abs(got[2] - cd(1, 0)) <= 1e-10);
  CHECK(std::abs(got[3] - cd(1, 2)) <= 1e-10);

  // the non-identity part scales as 1/lambda
  Eigen::MatrixXcd h = hamiltonian_of(helpers::l3());
  Eigen::MatrixXcd id9 = Eigen::MatrixXcd::Identity(9, 9);
  const double n1 = (superop::build_L(h, 1.0).m - id9).norm();
  const double n2 = (superop::build_L(h, 2.0).m - id9).norm();
  CHECK(n2 == Approx(0.5 * n1).epsilon(1e-12));

  CHECK_THROWS_AS(superop::build_L(h, 0.0), contract_error);
  CHECK_THROWS_AS(superop::build_L(h, -1.0), contract_error);
  Eigen::MatrixXcd nonherm(2, 2);
  nonherm << 0, 1, 2, 0;
  CHECK_THROWS_AS(superop::build_L(nonherm, 1.0), contract_error);
}

TEST_CASE("build_L spectrum, normality, and conditioning on random graphs") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    auto g = helpers::random_connected_graph(rng, n);
    Eigen::MatrixXcd h = hamiltonian_of(g);
    const double lambda = std::vector<double>{0.5, 1.0, 3.0}[trial % 3];
    auto l = superop::build_L(h, lambda);

    // eigenvalues are 1 + i (E_j - E_k)/lambda
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> raw(h);
    std::vector<double> expected;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        expected.push_back((raw.eigenvalues()(j) - raw.eigenvalues()(k)) / lambda);
    std::sort(expected.begin(), expected.end());
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(l.m);
    std::vector<cd> got(es.eigenvalues().data(), es.eigenvalues().data() + n * n);
    std::sort(got.begin(), got.end(), [](cd p, cd q) { return p.imag() < q.imag(); });
    for (int k = 0; k < n * n; ++k) {
      CHECK(std::abs(got[k].real() - 1.0) <= 1e-8);
      CHECK(std::abs(got[k].imag() - expected[k]) <= 1e-8);
    }

    // normal operator
    CHECK((l.m.adjoint() * l.m - l.m * l.m.adjoint()).cwiseAbs().maxCoeff() <= 1e-10);

    // never closer to singular than distance 1
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(l.m);
    CHECK(svd.singularValues().minCoeff() >= 1.0 - 1e-9);
  }
}

TEST_CASE("build_N fixtures") {
  auto n1 = superop::build_N(Eigen::MatrixXcd::Zero(1, 1), {0, 1.0});
  REQUIRE(n1.m.rows() == 1);
  CHECK(n1.m(0, 0) == cd(1, 0));

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd_k2(superop::build_N(hamiltonian_of(helpers::k2()), {0, 1.0}).m);
  CHECK(svd_k2.singularValues().minCoeff() > 1e-6);

  for (double lambda : {0.5, 1.0, 2.0}) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd_l3(
        superop::build_N(hamiltonian_of(helpers::l3()), {1, lambda}).m);
    CHECK(svd_l3.singularValues().minCoeff() < 1e-10);
  }

  CHECK_THROWS_AS(superop::build_N(hamiltonian_of(helpers::k2()), {5, 1.0}), contract_error);
}

TEST_CASE("Hilbert-Schmidt adjoint") {
  auto id = superop::Superoperator{Eigen::MatrixXcd::Identity(9, 9), 3};
  CHECK(helpers::max_abs_diff(superop::hs_adjoint(id).m, id.m) == 0.0);

  // left multiplication by a Hermitian matrix is self-adjoint
  Eigen::MatrixXcd a = hamiltonian_of(helpers::k2());
  superop::Superoperator left{Eigen::kroneckerProduct(a, Eigen::MatrixXcd::Identity(2, 2)), 2};
  CHECK(helpers::max_abs_diff(superop::hs_adjoint(left).m, left.m) <= 1e-14);

  // <X, S(Y)> = <S_adj(X), Y>
  std::mt19937_64 rng(23);
  superop::Superoperator s{random_complex(rng, 9), 3};
  Eigen::MatrixXcd x = random_complex(rng, 3), y = random_complex(rng, 3);
  const cd lhs = (superop::devectorize(superop::vectorize(x)).adjoint() *
                  superop::devectorize(s.m * superop::vectorize(y)))
                     .trace();
  const cd rhs = (superop::devectorize(superop::hs_adjoint(s).m * superop::vectorize(x))
                      .adjoint() *
                  y)
                     .trace();
  CHECK(std::abs(lhs - rhs) <= 1e-10);
}

TEST_CASE("solve_or_pinv") {
  superop::Superoperator id{Eigen::MatrixXcd::Identity(4, 4), 2};
  Eigen::VectorXcd b(4);
  b << 1, 2, 3, 4;
  auto r = superop::solve_or_pinv(id, b);
  CHECK_FALSE(r.was_singular);
  CHECK((r.x - b).norm() <= 1e-14);

  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(4, 4);
  d(0, 0) = 2.0;
  auto rs = superop::solve_or_pinv(superop::Superoperator{d, 2}, Eigen::VectorXcd::Ones(4));
  CHECK(rs.was_singular);
  CHECK(std::abs(rs.x(0) - cd(0.5, 0)) <= 1e-14);
  CHECK(rs.x.tail(3).norm() <= 1e-14);

  // rank-deficient 2x2 pinv picks the least-squares solution
  Eigen::MatrixXcd d2 = Eigen::MatrixXcd::Zero(2, 2);
  d2(0, 0) = 2.0;
  superop::PinvSolver pinv(d2, 1e-9);
  Eigen::VectorXcd b2(2);
  b2 << 1, 1;
  Eigen::VectorXcd x2 = pinv.apply(b2);
  CHECK(std::abs(x2(0) - cd(0.5, 0)) <= 1e-14);
  CHECK(std::abs(x2(1)) <= 1e-14);
  CHECK(pinv.singular());

  auto n_k2 = superop::build_N(hamiltonian_of(helpers::k2()), {0, 1.0});
  Eigen::VectorXcd rhs = superop::vectorize(helpers::pure_density(helpers::basis_state(2, 1)));
  auto sol = superop::solve_or_pinv(n_k2, rhs);
  CHECK_FALSE(sol.was_singular);
  CHECK((n_k2.m * sol.x - rhs).norm() <= 1e-10);
}

TEST_CASE("superop_expm_apply") {
  std::mt19937_64 rng(29);
  superop::Superoperator s{random_complex(rng, 4), 2};
  Eigen::VectorXcd v = Eigen::VectorXcd::Random(4);
  CHECK((superop::superop_expm_apply(s, v, 0.0) - v).norm() == 0.0);
  superop::Superoperator zero{Eigen::MatrixXcd::Zero(4, 4), 2};
  CHECK((superop::superop_expm_apply(zero, v, 2.5) - v).norm() <= 1e-14);
  CHECK_THROWS_AS(superop::superop_expm_apply(s, v, -1.0), contract_error);

  // conditional evolution never gains total probability
  auto n_op = superop::build_N(hamiltonian_of(helpers::k2()), {0, 1.0});
  superop::Superoperator gen{-1.0 * n_op.m, 2};
  Eigen::VectorXcd rho0 = superop::vectorize(helpers::pure_density(helpers::basis_state(2, 1)));
  double prev = 1.0;
  for (double t = 0.0; t <= 5.0; t += 0.5) {
    const double tr = superop::devectorize(superop::superop_expm_apply(gen, rho0, t)).trace().real();
    CHECK(tr <= prev + 1e-10);
    prev = tr;
  }
}

TEST_CASE("pencil eigenvalues lie on the imaginary axis") {
  // Every isolated rate the scan reports must sit on the imaginary axis and
  // must genuinely make the hitting operator singular there.
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);  // up to 5
    auto g = helpers::random_connected_graph(rng, n);
    const int v_f = static_cast<int>(rng() % n);
    const Eigen::MatrixXcd h = hamiltonian_of(g);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd q = id;
    q(v_f, v_f) = 0;
    for (const cd lam0 : superop::pencil_eigenvalues(h, v_f)) {
      CHECK(std::abs(lam0.real()) <= 1e-8);
      const Eigen::MatrixXcd n_at =
          Eigen::MatrixXcd::Identity(n * n, n * n) +
          (cd(0, 1) / lam0) *
              (Eigen::kroneckerProduct(h, id) - Eigen::kroneckerProduct(id, h.conjugate()))
                  .eval() -
          Eigen::kroneckerProduct(q, q.conjugate()).eval();
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(n_at);
      CHECK(svd.singularValues().minCoeff() <= 1e-8 * svd.singularValues().maxCoeff());
    }
  }
}

TEST_CASE("pencil scan on reference graphs") {
  // The singularities at rate zero and rate infinity are universal and sit
  // outside the scan window by construction; these graphs have no isolated
  // rates beyond them.
  CHECK(superop::pencil_eigenvalues(hamiltonian_of(helpers::k2()), 0).empty());
  CHECK(superop::pencil_eigenvalues(hamiltonian_of(helpers::l3()), 0).empty());
  CHECK(superop::pencil_eigenvalues(hamiltonian_of(helpers::l4()), 1).empty());
  CHECK(superop::pencil_eigenvalues(hamiltonian_of(helpers::kl31()), 2).empty());

  // A dark subspace makes the pencil singular at every rate; the scan
  // reports no isolated rates rather than noise.
  CHECK(superop::pencil_eigenvalues(hamiltonian_of(helpers::k3()), 0).empty());
  auto c4 = graph::make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  CHECK(superop::pencil_eigenvalues(hamiltonian_of(c4), 0).empty());

  CHECK_THROWS_AS(superop::pencil_eigenvalues(hamiltonian_of(helpers::k2()), 7),
                  contract_error);
  Eigen::MatrixXcd hc(2, 2);
  hc << cd(0, 0), cd(0, 1), cd(0, -1), cd(0, 0);
  CHECK_THROWS_AS(superop::pencil_eigenvalues(hc, 0), contract_error);
}
