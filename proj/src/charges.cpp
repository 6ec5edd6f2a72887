#include "copoly/charges.hpp"

#include <cmath>
#include <utility>

#include "copoly/error.hpp"

namespace copoly {

ChargeSet ChargeSet::zeros(int T) {
  require(T >= 1, "period T must be >= 1");
  ChargeSet c;
  c.T = T;
  c.omega_plus.assign(T, 0.0);
  c.omega_minus.assign(T, 0.0);
  c.omega_zero.assign(T, 0.0);
  c.omega_zero_tilde.assign(T, 0.0);
  c.removed_plus.assign(T, 0.0);
  c.canonical = true;
  return c;
}

void ChargeSet::validate() const {
  require(T >= 1, "period T must be >= 1");
  auto check = [&](const std::vector<double>& a, const char* name) {
    require(a.size() == static_cast<std::size_t>(T),
            std::string(name) + " must have length T = " + std::to_string(T));
    for (double v : a) {
      require(std::isfinite(v), std::string(name) + " has a non-finite entry");
    }
  };
  check(omega_plus, "omega_plus");
  check(omega_minus, "omega_minus");
  check(omega_zero, "omega_zero");
  check(omega_zero_tilde, "omega_zero_tilde");
}

double compute_h(const ChargeSet& c) {
  double s = 0.0;
  for (int i = 0; i < c.T; ++i) s += c.omega_plus[i] - c.omega_minus[i];
  return s / c.T;
}

ChargeSet canonicalize(const ChargeSet& raw) {
  raw.validate();
  // Decided from the data, not the flag, so hand-edited sets are safe.
  bool plus_zero = true;
  for (double v : raw.omega_plus) plus_zero = plus_zero && v == 0.0;
  // h within the zero tolerance never triggers the swap: rounding in a
  // zero-mean set must not move charge onto the flat bonds.
  const bool negative = compute_h(raw) < -Tolerances{}.h_zero;
  if (plus_zero && !negative) {
    ChargeSet c = raw;
    if (c.removed_plus.size() != static_cast<std::size_t>(c.T)) {
      c.removed_plus.assign(c.T, 0.0);
    }
    c.canonical = true;
    return c;
  }
  ChargeSet c = raw;
  if (negative) std::swap(c.omega_plus, c.omega_minus);
  c.swapped = raw.swapped != negative;
  c.removed_plus = c.omega_plus;
  for (int i = 0; i < c.T; ++i) {
    c.omega_minus[i] -= c.omega_plus[i];
    c.omega_zero_tilde[i] -= c.omega_plus[i];
    c.omega_plus[i] = 0.0;
  }
  c.canonical = true;
  return c;
}

SigmaMatrix compute_sigma(const ChargeSet& c) {
  const int T = c.T;
  const double h = compute_h(c);
  SigmaMatrix s{Matrix::Zero(T, T), Vector::Zero(T)};
  for (int a = 0; a < T; ++a) {
    double acc = 0.0;
    // Walk n2 from a+1 to a+T-1; epoch n2 lands in class (n2 mod T).
    for (int step = 1; step < T; ++step) {
      const std::int64_t n = a + step;
      acc += c.minus_at_epoch(n) - c.plus_at_epoch(n) + h;
      s.sigma(a, static_cast<int>(mod(n, T))) = acc;
    }
  }
  for (int b = 0; b < T; ++b) s.potential(b) = s.sigma(0, b);
  return s;
}

bool is_zero_h(const ChargeSet& c, const Tolerances& tol) {
  return std::abs(compute_h(c)) <= tol.h_zero;
}

bool is_zero_sigma(const SigmaMatrix& s, const Tolerances& tol) {
  return s.sigma.cwiseAbs().maxCoeff() <= tol.sigma_zero;
}

bool in_P(const ChargeSet& c, double delta, const Tolerances& tol) {
  if (delta > 1.0 + tol.critical) return false;
  if (!is_zero_h(c, tol)) return false;
  return !is_zero_sigma(compute_sigma(c), tol);
}

}  // namespace copoly
