#include <doctest.h>

#include <cmath>
#include <random>

#include "copoly/error.hpp"
#include "copoly/kernel.hpp"
#include "oracles.hpp"

using namespace copoly;

namespace {

ChargeSet copolymer(std::vector<double> minus, std::vector<double> zero) {
  ChargeSet c = ChargeSet::zeros(static_cast<int>(minus.size()));
  c.omega_minus = std::move(minus);
  c.omega_zero = std::move(zero);
  return c;
}

const ReturnLaw& law03() {
  static const ReturnLaw r = return_law(WalkModel(0.3), 1 << 17);
  return r;
}

PeriodicKernel trimmed(PeriodicKernel k, std::int64_t x_max) {
  k.x_max = x_max;
  for (auto& row : k.v) row.resize(static_cast<std::size_t>(x_max) + 1);
  return k;
}

}  // namespace

TEST_CASE("phi") {
  const ChargeSet z = ChargeSet::zeros(3);
  for (int a = 0; a < 3; ++a)
    for (std::int64_t l = 1; l < 10; ++l) {
      const Residue ra(a, 3), rb(a + l, 3);
      REQUIRE(phi(z, ra, rb, l).has_value());
      CHECK(*phi(z, ra, rb, l) == doctest::Approx(0.0));
      CHECK_FALSE(phi(z, ra, rb + 1, l).has_value());
    }
  // h = 2, Sigma = 0 on the diagonal, omega_zero = 0, l = 3 at T = 1.
  const ChargeSet c = copolymer({-2}, {0});
  CHECK(*phi(c, Residue(0, 1), Residue(0, 1), 3) ==
        doctest::Approx(std::log(0.5 * (1 + std::exp(-6.0)))).epsilon(1e-12));
  CHECK(*phi(c, Residue(0, 1), Residue(0, 1), 3) ==
        doctest::Approx(-0.690671).epsilon(1e-6));
  // Length one: a single flat bond.
  ChargeSet d = ChargeSet::zeros(2);
  d.omega_zero = {0.3, -0.1};
  d.omega_zero_tilde = {0.7, 0.2};
  CHECK(*phi(d, Residue(0, 2), Residue(1, 2), 1) == doctest::Approx(0.3 + 0.7));
}

TEST_CASE("phi_tilde") {
  const ChargeSet z = ChargeSet::zeros(2);
  CHECK(*phi_tilde(z, Residue(0, 2), Residue(0, 2), 0) == 0.0);
  CHECK(*phi_tilde(z, Residue(0, 2), Residue(1, 2), 1) == doctest::Approx(0.0));
  const ChargeSet c = copolymer({-2}, {0.5});
  CHECK(*phi_tilde(c, Residue(0, 1), Residue(0, 1), 3) ==
        doctest::Approx(-0.690671).epsilon(1e-6));
  CHECK(*phi_tilde(c, Residue(0, 1), Residue(0, 1), 3) ==
        doctest::Approx(*phi(c, Residue(0, 1), Residue(0, 1), 3) - 0.5));
  // A final single step goes up or down with equal probability, so it
  // carries log((1 + e^{omega_minus}) / 2); zero only if omega_minus = 0
  // there. Enumeration in test_partition confirms this against brute force.
  const ChargeSet e = copolymer({-1, 1}, {0, 0});
  CHECK(*phi_tilde(e, Residue(0, 2), Residue(1, 2), 1) ==
        doctest::Approx(std::log(0.5 * (1 + std::exp(-1.0)))));
  const ChargeSet pin = copolymer({0, 0}, {0.4, -1});
  CHECK(*phi_tilde(pin, Residue(0, 2), Residue(1, 2), 1) == doctest::Approx(0.0));
}

TEST_CASE("bundle basics") {
  const ReturnLaw& r = law03();
  SUBCASE("zero charges: B is the bistochastic q matrix, L = cK") {
    for (int T : {1, 2, 3, 5}) {
      const KernelBundle b(ChargeSet::zeros(T), r, 20000);
      for (int a = 0; a < T; ++a) {
        CHECK(b.B().row(a).sum() == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(b.B().col(a).sum() == doctest::Approx(1.0).epsilon(1e-6));
        for (int c = 0; c < T; ++c) {
          CHECK(b.L()(a, c) == doctest::Approx(r.cK));
          CHECK(b.Ltilde()(a, c) == doctest::Approx(2 * r.cK));
        }
      }
      CHECK(b.tail_error() < 1e-6);
    }
  }
  SUBCASE("pinning scales B") {
    const KernelBundle b(copolymer({0}, {-0.4}), r, 20000);
    CHECK(b.B()(0, 0) == doctest::Approx(std::exp(-0.4)).epsilon(1e-13));
    CHECK(b.B()(0, 0) == doctest::Approx(0.6703).epsilon(1e-4));
  }
  SUBCASE("structure and positivity") {
    std::mt19937_64 g(5);
    const ChargeSet c = oracle::random_charges(g, 3, 1.0);
    const KernelBundle b(c, r, 300);
    const Matrix partial = b.kernel().total();
    for (int a = 0; a < 3; ++a) {
      for (std::int64_t x = 1; x <= 300; ++x) {
        CHECK(b.m(a, x) > 0.0);
        const Matrix mx = b.kernel().matrix(x);
        for (int c2 = 0; c2 < 3; ++c2) {
          if (mod(c2 - a, 3) != mod(x, 3)) CHECK(mx(a, c2) == 0.0);
        }
      }
      for (int c2 = 0; c2 < 3; ++c2) CHECK(b.B()(a, c2) >= partial(a, c2));
    }
  }
  SUBCASE("horizon checks") {
    const ReturnLaw small = return_law(WalkModel(0.3), 100);
    CHECK_THROWS_AS(KernelBundle(ChargeSet::zeros(1), small, 200), Error);
    CHECK_THROWS_AS(KernelBundle(ChargeSet::zeros(1), r, 1), Error);
  }
}

TEST_CASE("x^{3/2} M(x) approaches L along each class") {
  const ReturnLaw& r = law03();
  for (const ChargeSet& c : {copolymer({-1, 1}, {0.2, -0.3}),
                             copolymer({-0.5, -0.2, 0.1}, {0, 0.1, 0}),
                             copolymer({0.4, -1.0, 0.6}, {-0.2, 0, 0.3})}) {
    const KernelBundle b(c, r, 100000);
    const int T = b.T();
    for (int a = 0; a < T; ++a) {
      for (std::int64_t x = 100000 - T + 1; x <= 100000; ++x) {
        const int e = static_cast<int>(mod(a + x, T));
        const double v = std::pow(static_cast<double>(x), 1.5) * b.m(a, x);
        CHECK(v == doctest::Approx(b.L()(a, e)).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("tail completion") {
  const ReturnLaw& r = law03();
  for (const ChargeSet& c : {ChargeSet::zeros(2), copolymer({-1, 1}, {0.1, 0.1}),
                             copolymer({-0.3, -0.1, -0.2}, {0.2, 0, 0})}) {
    const KernelBundle coarse(c, r, 2000);
    const KernelBundle fine(c, r, 100000);
    const double diff = (coarse.B() - fine.B()).cwiseAbs().maxCoeff();
    CHECK(diff <= coarse.tail_error() + fine.tail_error());
    // Completion beats plain truncation by orders of magnitude.
    const double trunc = (coarse.kernel().total() - fine.B()).cwiseAbs().maxCoeff();
    CHECK(diff < 1e-3 * trunc);
  }
}

TEST_CASE("convolution") {
  const ReturnLaw& r = law03();
  SUBCASE("direct product at small x") {
    const KernelBundle b(ChargeSet::zeros(1), r, 16);
    const PeriodicKernel mm = convolve(b.kernel(), b.kernel());
    CHECK(mm.at(0, 2) == doctest::Approx(0.16));
    CHECK(convolve_at(b.kernel(), b.kernel(), 2)(0, 0) == doctest::Approx(0.16));
  }
  SUBCASE("identity is the unit; dense and sparse forms agree") {
    const KernelBundle b(copolymer({-1, 0.5, 0.2}, {0.3, 0, -0.1}), r, 40);
    const PeriodicKernel id = PeriodicKernel::identity(3, 40);
    const PeriodicKernel left = convolve(id, b.kernel());
    for (int a = 0; a < 3; ++a)
      for (std::int64_t x = 0; x <= 40; ++x) CHECK(left.at(a, x) == b.kernel().at(a, x));
    const PeriodicKernel mm = convolve(b.kernel(), b.kernel());
    for (std::int64_t x = 0; x <= 80; ++x) {
      Matrix dense = Matrix::Zero(3, 3);
      for (std::int64_t y = 0; y <= x; ++y) {
        dense += b.kernel().matrix(y) * b.kernel().matrix(x - y);
      }
      CHECK((dense - mm.matrix(x)).cwiseAbs().maxCoeff() < 1e-15);
      CHECK((dense - convolve_at(b.kernel(), b.kernel(), x)).cwiseAbs().maxCoeff() < 1e-15);
    }
  }
  SUBCASE("total mass of n-fold convolutions is the n-th power") {
    // Exact for the truncated kernel; the completed B differs by the tail.
    const KernelBundle b(copolymer({-0.8, 0.8}, {-0.1, 0.2}), r, 500);
    const Matrix Bt = b.kernel().total();
    PeriodicKernel power = b.kernel();
    Matrix Bn = Bt;
    for (int n = 2; n <= 4; ++n) {
      power = convolve(power, b.kernel());
      Bn = Bn * Bt;
      CHECK((power.total() - Bn).cwiseAbs().maxCoeff() < 1e-12);
    }
    const Matrix B4 = b.B() * b.B() * b.B() * b.B();
    CHECK((power.total() - B4).cwiseAbs().maxCoeff() < 4 * 2 * b.tail(0.0).maxCoeff());
  }
  SUBCASE("two-fold convolution tail is BL + LB") {
    for (const ChargeSet& c : {copolymer({-1, 1}, {0, 0}),
                               copolymer({-0.4, 0.3, 0.1}, {-0.2, 0.1, 0})}) {
      const KernelBundle b(c, r, 16384);
      const PeriodicKernel mm = convolve(b.kernel(), b.kernel());
      const Matrix target = b.B() * b.L() + b.L() * b.B();
      const int T = b.T();
      for (int a = 0; a < T; ++a) {
        for (int s = 0; s < T; ++s) {
          // Richardson in x^{-1/2} using x and about 4x, same class.
          const std::int64_t x1 = 1200 * T + s, x4 = 4800 * T + s;
          const int e = static_cast<int>(mod(a + x1, T));
          const double a1 = std::pow(static_cast<double>(x1), 1.5) * mm.at(a, x1);
          const double a4 = std::pow(static_cast<double>(x4), 1.5) * mm.at(a, x4);
          CHECK(2 * a4 - a1 == doctest::Approx(target(a, e)).epsilon(2e-3));
        }
      }
    }
  }
  SUBCASE("k-fold bound with the k = 1 constant") {
    const KernelBundle b(copolymer({-0.6, 0.6}, {0.2, -0.2}), r, 400);
    const int T = 2;
    double C = 0.0;
    for (int a = 0; a < T; ++a)
      for (std::int64_t x = 1; x <= 400; ++x) {
        const int e = static_cast<int>(mod(a + x, T));
        C = std::max(C, std::pow(static_cast<double>(x), 1.5) * b.m(a, x) / b.B()(a, e));
      }
    PeriodicKernel power = b.kernel();
    Matrix Bk = b.B();
    for (int k = 2; k <= 6; ++k) {
      power = trimmed(convolve(power, b.kernel()), 400);
      Bk = Bk * b.B();
      for (int a = 0; a < T; ++a)
        for (std::int64_t x = k; x <= 400; ++x) {
          const int e = static_cast<int>(mod(a + x, T));
          CHECK(std::pow(static_cast<double>(x), 1.5) * power.at(a, x) <=
                C * k * k * k * Bk(a, e));
        }
    }
  }
}
