#pragma once

#include <cstdint>
#include <limits>
#include <span>

#include <Eigen/Dense>

namespace copoly {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum_i exp(args[i])), with the usual max shift. Empty input or all
/// -inf returns -inf.
double log_sum_exp(std::span<const double> args);

/// Streaming log-sum-exp. Rescales the running sum whenever a larger
/// argument shows up, so one pass suffices.
class LogAccumulator {
 public:
  void add(double log_term);
  double value() const;

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

/// log[(1 + exp(z)) / 2], accurate for large |z|.
double log_half_one_plus_exp(double z);

/// Upper incomplete gamma function Gamma(a, z) for a in {-1/2, 1/2}
/// and z >= 0 (a = -1/2 requires z > 0).
double upper_gamma_half_integer(double a, double z);

/// Sum over x = x0, x0 + step, x0 + 2 step, ... of x^{-s} exp(-rate x), for
/// s in {1/2, 3/2}, x0 >= 1, rate >= 0. Uses Euler-Maclaurin with two
/// correction terms when the summand is slowly varying on the scale of
/// `step`, direct summation otherwise. Returns +inf for s = 1/2, rate = 0.
double residue_power_tail(std::int64_t x0, std::int64_t step, double s,
                          double rate);

/// Smallest x > after with x = residue (mod period).
std::int64_t first_in_class_after(std::int64_t after, std::int64_t residue,
                                  std::int64_t period);

/// Positive modulus.
inline std::int64_t mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

/// log of the binomial coefficient C(n, k); -inf outside 0 <= k <= n.
double log_choose(std::int64_t n, std::int64_t k);

}  // namespace copoly
