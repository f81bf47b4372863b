#include <catch2/catch_amalgamated.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <random>

#include "ctqw/graph.hpp"
#include "ctqw/spectral.hpp"
#include "test_helpers.hpp"

using namespace ctqw;
using Catch::Approx;
using cd = std::complex<double>;

namespace {
Eigen::MatrixXcd hamiltonian_of(const graph::Graph& g) {
  return graph::hamiltonian(g).cast<cd>();
}

Eigen::MatrixXcd random_hermitian(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = cd(gauss(rng), gauss(rng));
  return 0.5 * (a + a.adjoint()).eval();
}
}  // namespace

TEST_CASE("eigendecompose K_2") {
  auto s = spectral::eigendecompose(hamiltonian_of(helpers::k2()));
  REQUIRE(s.eigenvalues.size() == 2);
  CHECK(s.eigenvalues[0] == Approx(0.0).margin(1e-12));
  CHECK(s.eigenvalues[1] == Approx(2.0).margin(1e-12));
  Eigen::VectorXcd uniform = helpers::uniform_state(2);
  CHECK(helpers::max_abs_diff(s.projectors[0], uniform * uniform.adjoint()) <= 1e-12);
  CHECK(helpers::max_abs_diff(s.projectors[1],
                              Eigen::MatrixXcd::Identity(2, 2) - uniform * uniform.adjoint()) <=
        1e-12);
}

TEST_CASE("eigendecompose L_3 and the zero matrix") {
  auto s = spectral::eigendecompose(hamiltonian_of(helpers::l3()));
  REQUIRE(s.eigenvalues.size() == 3);
  CHECK(s.eigenvalues[0] == Approx(0.0).margin(1e-12));
  CHECK(s.eigenvalues[1] == Approx(1.0).margin(1e-12));
  CHECK(s.eigenvalues[2] == Approx(3.0).margin(1e-12));
  // E = 1 eigenvector is (1,0,-1)/sqrt(2) up to phase; compare projectors
  Eigen::VectorXcd v(3);
  v << 1.0 / std::sqrt(2.0), 0.0, -1.0 / std::sqrt(2.0);
  CHECK(helpers::max_abs_diff(s.projectors[1], v * v.adjoint()) <= 1e-12);

  auto z = spectral::eigendecompose(Eigen::MatrixXcd::Zero(3, 3));
  REQUIRE(z.eigenvalues.size() == 1);
  CHECK(z.eigenvalues[0] == 0.0);
  CHECK(z.multiplicities[0] == 3);
  CHECK(helpers::max_abs_diff(z.projectors[0], Eigen::MatrixXcd::Identity(3, 3)) <= 1e-14);
}

TEST_CASE("degenerate eigenvalues are clustered") {
  auto s4 = spectral::eigendecompose(hamiltonian_of(helpers::s4()));
  REQUIRE(s4.eigenvalues.size() == 3);
  CHECK(s4.multiplicities == std::vector<int>{1, 2, 1});
  CHECK(s4.eigenvalues[1] == Approx(1.0).margin(1e-12));

  auto kite = spectral::eigendecompose(hamiltonian_of(helpers::kl31()));
  CHECK(kite.multiplicities == std::vector<int>{1, 1, 1, 1});

  // near-degenerate pair merges into the mean; well-separated pair does not
  Eigen::MatrixXcd d = Eigen::Vector3cd(1.0, 1.0 + 1e-12, 2.0).asDiagonal();
  auto merged = spectral::eigendecompose(d);
  REQUIRE(merged.eigenvalues.size() == 2);
  CHECK(merged.eigenvalues[0] == Approx(1.0 + 5e-13).margin(1e-13));
  CHECK(merged.multiplicities[0] == 2);
  auto split = spectral::eigendecompose(d, 1e-14);
  CHECK(split.eigenvalues.size() == 3);
}

TEST_CASE("eigendecompose rejects bad input") {
  Eigen::MatrixXcd nonherm(2, 2);
  nonherm << 0, 1, 2, 0;
  CHECK_THROWS_AS(spectral::eigendecompose(nonherm), contract_error);
  CHECK_THROWS_AS(spectral::eigendecompose(Eigen::MatrixXcd::Zero(2, 3)), contract_error);
  CHECK_THROWS_AS(spectral::eigendecompose(Eigen::MatrixXcd::Zero(2, 2), 0.0), contract_error);
}

TEST_CASE("spectrum invariants on random Hermitian matrices") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    Eigen::MatrixXcd h = random_hermitian(rng, n);
    auto s = spectral::eigendecompose(h);

    Eigen::MatrixXcd sum_p = Eigen::MatrixXcd::Zero(n, n);
    Eigen::MatrixXcd recon = Eigen::MatrixXcd::Zero(n, n);
    int total_dim = 0;
    for (size_t i = 0; i < s.eigenvalues.size(); ++i) {
      sum_p += s.projectors[i];
      recon += s.eigenvalues[i] * s.projectors[i];
      total_dim += s.multiplicities[i];
      CHECK(std::abs(s.projectors[i].trace().real() - s.multiplicities[i]) <= 1e-10);
      for (size_t j = 0; j < s.eigenvalues.size(); ++j) {
        Eigen::MatrixXcd prod = s.projectors[i] * s.projectors[j];
        if (i == j)
          CHECK(helpers::max_abs_diff(prod, s.projectors[i]) <= 1e-10);
        else
          CHECK(prod.cwiseAbs().maxCoeff() <= 1e-10);
      }
    }
    CHECK(total_dim == n);
    CHECK(helpers::max_abs_diff(sum_p, Eigen::MatrixXcd::Identity(n, n)) <= 1e-10);
    CHECK(helpers::max_abs_diff(recon, h) <= 1e-10);
  }
}

TEST_CASE("evolve identities") {
  auto s = spectral::eigendecompose(hamiltonian_of(helpers::k2()));
  Eigen::VectorXcd v1 = helpers::basis_state(2, 0);

  CHECK((spectral::evolve(s, v1, 0.0) - v1).norm() <= 1e-14);

  // half period of the two-level system: full transfer up to global phase
  Eigen::VectorXcd at = spectral::evolve(s, v1, M_PI / 2.0);
  CHECK(std::norm(at(1)) == Approx(1.0).margin(1e-12));

  CHECK_THROWS_AS(spectral::evolve(s, 2.0 * v1, 1.0), contract_error);
  CHECK_THROWS_AS(spectral::evolve(s, helpers::basis_state(3, 0), 1.0), contract_error);
}

TEST_CASE("evolve is unitary, composes, and matches the dense exponential") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    Eigen::MatrixXcd h = random_hermitian(rng, n);
    auto s = spectral::eigendecompose(h);
    Eigen::VectorXcd psi = helpers::random_state(rng, n);
    const double t1 = 0.37 * (trial + 1), t2 = 1.21;

    Eigen::VectorXcd a = spectral::evolve(s, psi, t1);
    CHECK(a.norm() == Approx(1.0).margin(1e-10));
    Eigen::VectorXcd b = spectral::evolve(s, a, t2);
    Eigen::VectorXcd c = spectral::evolve(s, psi, t1 + t2);
    CHECK((b - c).norm() <= 1e-9);

    Eigen::MatrixXcd direct = (cd(0.0, -t1) * h).exp();
    CHECK((a - direct * psi).norm() <= 1e-9);
    Eigen::MatrixXcd u = spectral::propagator(s, t1);
    CHECK(helpers::max_abs_diff(u, direct) <= 1e-9);
    CHECK(helpers::max_abs_diff(u * u.adjoint(), Eigen::MatrixXcd::Identity(n, n)) <= 1e-10);
  }
}

TEST_CASE("star witness state keeps zero overlap with the center") {
  auto g = helpers::s4();
  auto s = spectral::eigendecompose(hamiltonian_of(g));
  Eigen::VectorXcd w = *graph::complement_witness(g, 1);
  for (double t = 0.1; t <= 10.0; t += 0.1)
    CHECK(std::abs(spectral::evolve(s, w, t)(1)) <= 1e-10);
}
