#include <doctest.h>

#include <cmath>
#include <random>

#include "copoly/error.hpp"
#include "copoly/spectral.hpp"
#include "oracles.hpp"

using namespace copoly;

namespace {

const ReturnLaw& law03() {
  static const ReturnLaw r = return_law(WalkModel(0.3), 1 << 17);
  return r;
}

ChargeSet pinning(std::vector<double> zero) {
  ChargeSet c = ChargeSet::zeros(static_cast<int>(zero.size()));
  c.omega_zero = std::move(zero);
  return c;
}

ChargeSet copolymer(std::vector<double> minus, std::vector<double> zero) {
  ChargeSet c = ChargeSet::zeros(static_cast<int>(minus.size()));
  c.omega_minus = std::move(minus);
  c.omega_zero = std::move(zero);
  return c;
}

}  // namespace

TEST_CASE("perron on small matrices") {
  Matrix Q(2, 2);
  Q << 1, 2, 3, 4;
  const PerronResult r = perron(Q);
  CHECK(r.value == doctest::Approx((5 + std::sqrt(33.0)) / 2).epsilon(1e-13));
  CHECK(r.right.sum() == doctest::Approx(2.0));
  CHECK(r.left.dot(r.right) == doctest::Approx(1.0));
  CHECK((Q * r.right - r.value * r.right).norm() < 1e-12);
  CHECK((Q.transpose() * r.left - r.value * r.left).norm() < 1e-12);

  // Period-2 chain: power iteration alone would oscillate.
  Matrix P(2, 2);
  P << 0, 1, 1, 0;
  CHECK(perron(P).value == doctest::Approx(1.0));

  Matrix cyc = Matrix::Zero(3, 3);
  cyc(0, 1) = 2;
  cyc(1, 2) = 0.5;
  cyc(2, 0) = 1;
  CHECK(is_irreducible(cyc));
  CHECK(perron(cyc).value == doctest::Approx(1.0));

  Matrix red = Matrix::Identity(2, 2);
  CHECK_FALSE(is_irreducible(red));
  CHECK_THROWS_AS(perron(red), Error);
  Matrix neg = Matrix::Ones(2, 2);
  neg(0, 1) = -1;
  CHECK_THROWS_AS(perron(neg), Error);
}

TEST_CASE("perron against Eigen's eigensolver") {
  std::mt19937_64 g(17);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int T = 2; T <= 7; ++T) {
    Matrix Q(T, T);
    for (int i = 0; i < T; ++i)
      for (int j = 0; j < T; ++j) Q(i, j) = u(g);
    const Eigen::EigenSolver<Matrix> es(Q);
    double best = 0.0;
    for (int i = 0; i < T; ++i) best = std::max(best, std::abs(es.eigenvalues()(i)));
    CHECK(perron(Q).value == doctest::Approx(best).epsilon(1e-11));
  }
}

TEST_CASE("regimes of homogeneous pinning") {
  const ReturnLaw& r = law03();
  SUBCASE("zero charges are critical") {
    const KernelBundle b(ChargeSet::zeros(3), r, 100000);
    const SpectralData s = free_energy(b);
    CHECK(s.delta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.critical);
    CHECK(s.F == 0.0);
    CHECK(std::isinf(s.mu));
    CHECK(s.residual < 1e-10);
  }
  SUBCASE("attractive pinning") {
    const KernelBundle b(pinning({0.4}), r, 100000);
    const SpectralData s = free_energy(b);
    CHECK(s.delta == doctest::Approx(std::exp(0.4)).epsilon(1e-12));
    CHECK(s.F == doctest::Approx(0.0964935476112317073).epsilon(1e-10));
    CHECK(s.mu == doctest::Approx(2.38971102720067481).epsilon(1e-10));
    CHECK_FALSE(s.critical);
    CHECK(delta_of_b(b, s.F) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(delta_of_b(b, 0.0) == s.delta);
    double prev = kInf;
    for (int i = 0; i <= 100; ++i) {
      const double d = delta_of_b(b, 0.01 * i);
      CHECK(d < prev);
      prev = d;
    }
    CHECK(delta_of_b(b, 40.0) < 1e-15);
  }
  SUBCASE("repulsive pinning") {
    const KernelBundle b(pinning({-0.4}), r, 100000);
    const SpectralData s = free_energy(b);
    CHECK(s.delta == doctest::Approx(std::exp(-0.4)).epsilon(1e-12));
    CHECK(s.F == 0.0);
    CHECK_FALSE(s.critical);
  }
}

TEST_CASE("tilted Perron value is decreasing and F > 0 iff delta > 1") {
  const ReturnLaw& r = law03();
  std::mt19937_64 g(23);
  for (int i = 0; i < 12; ++i) {
    const ChargeSet c = canonicalize(oracle::random_charges(g, 1 + i % 4, 0.8));
    const KernelBundle b(c, r, 20000);
    const SpectralData s = free_energy(b);
    CHECK((s.F > 0.0) == (s.delta > 1.0 + b.tolerances().critical));
    double prev = s.delta;
    for (double beta : {0.01, 0.05, 0.2, 1.0}) {
      const double d = delta_of_b(b, beta);
      CHECK(d < prev);
      prev = d;
    }
    if (s.F > 0.0) {
      CHECK(delta_of_b(b, s.F) == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(s.residual < 1e-10);
      CHECK(s.mu > 0.0);
      CHECK(std::isfinite(s.mu));
    }
  }
}

TEST_CASE("mean of the tilted kernel by finite differences") {
  // mu = -d/db Delta(b) at b = F, since zeta and xi are normalized.
  const ReturnLaw& r = law03();
  const KernelBundle b(copolymer({-0.5, 0.2}, {0.5, 0.3}), r, 100000);
  const SpectralData s = free_energy(b);
  REQUIRE(s.F > 0.0);
  const double hstep = 1e-5 * s.F;
  const double deriv =
      (delta_of_b(b, s.F - hstep) - delta_of_b(b, s.F + hstep)) / (2 * hstep);
  CHECK(s.mu == doctest::Approx(deriv).epsilon(1e-6));
}

TEST_CASE("Gamma is a semi-Markov kernel with stationary law nu") {
  const ReturnLaw& r = law03();
  for (const ChargeSet& c : {ChargeSet::zeros(2), pinning({0.4, -0.1, 0.2}),
                             copolymer({-0.6, 0.1}, {0.3, 0.2})}) {
    const KernelBundle b(c, r, 100000);
    const SpectralData s = free_energy(b);
    const SemiMarkovKernel gk = gamma_kernel(s, b);
    const Matrix Q = gk.embedded_chain();
    for (int a = 0; a < b.T(); ++a) CHECK(Q.row(a).sum() == doctest::Approx(1.0).epsilon(1e-9));
    const Vector nuQ = Q.transpose() * s.nu;
    CHECK((nuQ - s.nu).cwiseAbs().maxCoeff() < 1e-9);
    // Entries reproduce e^{-Fx} M xi_b / xi_a.
    for (int a = 0; a < b.T(); ++a)
      for (std::int64_t x : {1, 2, 7, 100}) {
        const int e = static_cast<int>(mod(a + x, b.T()));
        CHECK(gk.at(a, x) == doctest::Approx(std::exp(-s.F * x) * b.m(a, x) *
                                             s.xi(e) / s.xi(a)));
      }
  }
  const KernelBundle del(pinning({-0.4}), r, 1000);
  CHECK_THROWS_AS(gamma_kernel(free_energy(del), del), Error);
}
