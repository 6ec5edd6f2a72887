#include "copoly/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "copoly/error.hpp"

namespace copoly {

double log_sum_exp(std::span<const double> args) {
  if (args.empty()) return kNegInf;
  const double m = *std::max_element(args.begin(), args.end());
  if (m == kNegInf) return kNegInf;
  if (m == kInf) return kInf;
  double sum = 0.0;
  for (double a : args) sum += std::exp(a - m);
  return m + std::log(sum);
}

void LogAccumulator::add(double log_term) {
  if (log_term == kNegInf) return;
  if (log_term <= max_) {
    sum_ += std::exp(log_term - max_);
  } else {
    sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
    max_ = log_term;
  }
}

double LogAccumulator::value() const {
  if (max_ == kNegInf) return kNegInf;
  return max_ + std::log(sum_);
}

double log_half_one_plus_exp(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z)) - std::numbers::ln2;
  return std::log1p(std::exp(z)) - std::numbers::ln2;
}

namespace {

// Modified Lentz evaluation of the continued fraction
//   Gamma(a, z) = e^{-z} z^a / (z + 1 - a - 1(1-a)/(z + 3 - a - 2(2-a)/(...)))
// valid for z >= 1 and any real a.
double upper_gamma_continued_fraction(double a, double z) {
  constexpr double tiny = 1e-300;
  double b = z + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-z + a * std::log(z)) * h;
}

}  // namespace

double upper_gamma_half_integer(double a, double z) {
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  if (a == 0.5) return sqrt_pi * std::erfc(std::sqrt(z));
  if (a == -0.5) {
    require(z > 0.0, "Gamma(-1/2, z) requires z > 0");
    if (z < 1.0) {
      return 2.0 * std::exp(-z) / std::sqrt(z) -
             2.0 * sqrt_pi * std::erfc(std::sqrt(z));
    }
    return upper_gamma_continued_fraction(a, z);
  }
  fail(ErrorCode::InvalidInput, "upper_gamma_half_integer: a must be +-1/2");
}

std::int64_t first_in_class_after(std::int64_t after, std::int64_t residue,
                                  std::int64_t period) {
  const std::int64_t x = after + 1;
  return x + mod(residue - x, period);
}

double residue_power_tail(std::int64_t x0, std::int64_t step, double s,
                          double rate) {
  require(x0 >= 1 && step >= 1, "residue_power_tail: bad lattice");
  require(s == 0.5 || s == 1.5, "residue_power_tail: s must be 1/2 or 3/2");
  require(rate >= 0.0, "residue_power_tail: negative rate");
  if (s == 0.5 && rate == 0.0) return kInf;

  const double t = static_cast<double>(step);
  auto smooth = [&](double xk) {
    return xk >= 64.0 * t && t * (s / xk + rate) <= 0.1;
  };

  // Sum directly until the summand is slowly varying on the lattice scale,
  // or negligible.
  double sum = 0.0;
  std::int64_t xk = x0;
  while (!smooth(static_cast<double>(xk))) {
    const double xd = static_cast<double>(xk);
    const double term = std::exp(-s * std::log(xd) - rate * xd);
    sum += term;
    if (term <= 1e-18 * sum) return sum;
    xk += step;
  }

  const double x = static_cast<double>(xk);
  const double g1 = -s / x - rate;  // (log f)'
  const double f0 = std::exp(-s * std::log(x) - rate * x);
  if (f0 == 0.0) return sum;

  // Euler-Maclaurin: sum_{k>=0} g(k) = int_0^inf g + g(0)/2 - g'(0)/12
  //                                    + g'''(0)/720 - ...
  // with g(k) = f(x + k t).
  double integral;
  const double z = rate * x;
  if (rate == 0.0) {
    integral = std::pow(x, 1.0 - s) / (s - 1.0);
  } else {
    integral = std::pow(rate, s - 1.0) * upper_gamma_half_integer(1.0 - s, z);
  }
  const double g2 = s / (x * x);
  const double g3 = -2.0 * s / (x * x * x);
  const double f1 = f0 * g1;
  const double f3 = f0 * (g1 * g1 * g1 + 3.0 * g1 * g2 + g3);
  return sum + integral / t + 0.5 * f0 - t * f1 / 12.0 +
         t * t * t * f3 / 720.0;
}

namespace {

// lgamma without the global signgam write, so samplers can run in threads.
double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

}  // namespace

double log_choose(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n || n < 0) return kNegInf;
  return log_gamma(static_cast<double>(n) + 1.0) -
         log_gamma(static_cast<double>(k) + 1.0) -
         log_gamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace copoly
