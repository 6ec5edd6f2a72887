#include "copoly/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "copoly/error.hpp"

namespace copoly {

namespace {

bool supported(Residue a, Residue b, std::int64_t l) {
  return mod(l, a.modulus()) == (b - a).value();
}

}  // namespace

std::optional<double> phi(const ChargeSet& c, Residue a, Residue b,
                          std::int64_t l) {
  require(l >= 1, "phi: excursion length must be >= 1");
  if (!supported(a, b, l)) return std::nullopt;
  if (l == 1) return c.zero_at(b) + c.zero_tilde_at(b) - c.plus_at(b);
  const double h = compute_h(c);
  const double s = compute_sigma(c).sigma(a.value(), b.value());
  return c.zero_at(b) +
         log_half_one_plus_exp(-static_cast<double>(l) * h + s);
}

std::optional<double> phi_tilde(const ChargeSet& c, Residue a, Residue b,
                                std::int64_t l) {
  require(l >= 0, "phi_tilde: length must be >= 0");
  if (!supported(a, b, l)) return std::nullopt;
  if (l == 0) return 0.0;
  const double h = compute_h(c);
  const double s = compute_sigma(c).sigma(a.value(), b.value());
  return log_half_one_plus_exp(-static_cast<double>(l) * h + s);
}

PeriodicKernel PeriodicKernel::identity(int T, std::int64_t x_max) {
  PeriodicKernel k;
  k.T = T;
  k.x_max = x_max;
  k.v.assign(T, std::vector<double>(static_cast<std::size_t>(x_max) + 1, 0.0));
  for (int a = 0; a < T; ++a) k.v[a][0] = 1.0;
  return k;
}

Matrix PeriodicKernel::matrix(std::int64_t x) const {
  Matrix out = Matrix::Zero(T, T);
  if (x < 0 || x > x_max) return out;
  for (int a = 0; a < T; ++a) out(a, mod(a + x, T)) = v[a][x];
  return out;
}

Matrix PeriodicKernel::total() const {
  Matrix out = Matrix::Zero(T, T);
  for (int a = 0; a < T; ++a) {
    for (std::int64_t x = 0; x <= x_max; ++x) out(a, mod(a + x, T)) += v[a][x];
  }
  return out;
}

PeriodicKernel convolve(const PeriodicKernel& F, const PeriodicKernel& G) {
  require(F.T == G.T, "convolve: period mismatch");
  const int T = F.T;
  PeriodicKernel out;
  out.T = T;
  out.x_max = F.x_max + G.x_max;
  out.v.assign(T,
               std::vector<double>(static_cast<std::size_t>(out.x_max) + 1, 0.0));
  for (int a = 0; a < T; ++a) {
    for (std::int64_t y = 0; y <= F.x_max; ++y) {
      const double f = F.v[a][y];
      if (f == 0.0) continue;
      const auto& g = G.v[mod(a + y, T)];
      double* dst = out.v[a].data() + y;
      for (std::int64_t z = 0; z <= G.x_max; ++z) dst[z] += f * g[z];
    }
  }
  return out;
}

Matrix convolve_at(const PeriodicKernel& F, const PeriodicKernel& G,
                   std::int64_t x) {
  require(F.T == G.T, "convolve_at: period mismatch");
  require(x >= 0 && x <= F.x_max + G.x_max, "convolve_at: x out of range");
  const int T = F.T;
  Matrix out = Matrix::Zero(T, T);
  for (int a = 0; a < T; ++a) {
    double acc = 0.0;
    const std::int64_t lo = std::max<std::int64_t>(0, x - G.x_max);
    const std::int64_t hi = std::min(x, F.x_max);
    for (std::int64_t y = lo; y <= hi; ++y) {
      acc += F.v[a][y] * G.v[mod(a + y, T)][x - y];
    }
    out(a, mod(a + x, T)) = acc;
  }
  return out;
}

KernelBundle::KernelBundle(const ChargeSet& c, const ReturnLaw& r,
                           std::int64_t x_max, const Tolerances& tol)
    : charges_(canonicalize(c)), tol_(tol), x_max_(x_max), p_(r.p) {
  require(x_max >= 2, "X_max must be >= 2");
  require(x_max <= r.n_max, "X_max exceeds the return-law horizon");
  require(r.cK > 0.0, "return law carries no tail constant");
  const int T = charges_.T;
  h_ = compute_h(charges_);
  h_zero_ = std::abs(h_) <= tol_.h_zero;
  if (h_zero_) h_ = 0.0;  // M, its tail and L must agree on the case
  cK_ = r.cK;
  sigma_ = compute_sigma(charges_);
  K_.assign(r.K.begin(), r.K.begin() + x_max + 1);
  Psurv_.assign(r.Psurv.begin(), r.Psurv.begin() + x_max + 1);

  M_.assign(T, std::vector<double>(static_cast<std::size_t>(x_max) + 1, 0.0));
  for (int a = 0; a < T; ++a) {
    for (std::int64_t x = 1; x <= x_max; ++x) {
      M_[a][x] = std::exp(log_phi(a, x)) * K_[x];
    }
  }
  kernel_.T = T;
  kernel_.x_max = x_max;
  kernel_.v = M_;

  // Match the continuous tail to the table: the completed tail of K sums to
  // P(x_max), so zero-charge rows of B sum to one.
  const double s0 = residue_power_tail(x_max + 1, 1, 1.5, 0.0);
  kappa_ = Psurv_[x_max] / s0;
  kappa_surv_ = Psurv_[x_max] * std::sqrt(static_cast<double>(x_max));

  const Matrix tl = tail(0.0);
  B_ = kernel_.total() + tl;
  const double xm = static_cast<double>(x_max);
  const double shape_err =
      std::abs(std::pow(xm, 1.5) * K_[x_max] / kappa_ - 1.0) + 1.0 / xm;
  tail_error_ = tl.maxCoeff() * shape_err;

  L_.resize(T, T);
  Ltilde_.resize(T, T);
  for (int a = 0; a < T; ++a) {
    for (int b = 0; b < T; ++b) {
      const double pin = std::exp(charges_.zero_at_epoch(b));
      const double s = h_zero_ ? 1.0 + std::exp(sigma_.sigma(a, b)) : 1.0;
      L_(a, b) = cK_ * 0.5 * s * pin;
      Ltilde_(a, b) = cK_ * s;
    }
  }
}

double KernelBundle::log_phi(int a, std::int64_t x) const {
  const int b = static_cast<int>(mod(a + x, charges_.T));
  if (x == 1) {
    return charges_.zero_at_epoch(b) + charges_.zero_tilde_at_epoch(b) -
           charges_.plus_at_epoch(b);
  }
  return charges_.zero_at_epoch(b) +
         log_half_one_plus_exp(-static_cast<double>(x) * h_ +
                               sigma_.sigma(a, b));
}

double KernelBundle::log_m(int a, std::int64_t x) const {
  require(x >= 1 && x <= x_max_, "log_m: x out of range");
  return log_phi(a, x) + std::log(K_[x]);
}

double KernelBundle::tail_entry(int a, int b, double rate, double s) const {
  const int T = charges_.T;
  const std::int64_t g = mod(b - a, T);
  const std::int64_t x0 = first_in_class_after(x_max_, g, T);
  const double first = residue_power_tail(x0, T, s, rate);
  const double second = residue_power_tail(x0, T, s, rate + h_);
  return std::exp(charges_.zero_at_epoch(b)) * 0.5 * kappa_ *
         (first + std::exp(sigma_.sigma(a, b)) * second);
}

Matrix KernelBundle::tail(double rate) const {
  const int T = charges_.T;
  Matrix out(T, T);
  for (int a = 0; a < T; ++a)
    for (int b = 0; b < T; ++b) out(a, b) = tail_entry(a, b, rate, 1.5);
  return out;
}

Matrix KernelBundle::tail_first_moment(double rate) const {
  const int T = charges_.T;
  Matrix out(T, T);
  for (int a = 0; a < T; ++a)
    for (int b = 0; b < T; ++b) out(a, b) = tail_entry(a, b, rate, 0.5);
  return out;
}

Matrix KernelBundle::tilted_sum(double rate) const {
  const int T = charges_.T;
  Matrix out = tail(rate);
  for (int a = 0; a < T; ++a) {
    const auto& row = M_[a];
    std::vector<double> acc(T, 0.0);
    for (std::int64_t x = 1; x <= x_max_; ++x) {
      acc[mod(a + x, T)] += row[x] * std::exp(-rate * static_cast<double>(x));
    }
    for (int b = 0; b < T; ++b) out(a, b) += acc[b];
  }
  return out;
}

double KernelBundle::free_tail_weight(int a, std::int64_t l) const {
  require(l >= 0 && l <= x_max_, "free_tail_weight: l out of range");
  if (l == 0) return 1.0;
  const int b = static_cast<int>(mod(a + l, charges_.T));
  return Psurv_[l] * std::exp(log_half_one_plus_exp(
                         -static_cast<double>(l) * h_ + sigma_.sigma(a, b)));
}

double KernelBundle::log_free_tail_weight(int a, std::int64_t l) const {
  require(l >= 0 && l <= x_max_, "log_free_tail_weight: l out of range");
  if (l == 0) return 0.0;
  const int b = static_cast<int>(mod(a + l, charges_.T));
  return std::log(Psurv_[l]) +
         log_half_one_plus_exp(-static_cast<double>(l) * h_ +
                               sigma_.sigma(a, b));
}

double KernelBundle::free_tail_weight_tail(int a, int b, double rate) const {
  const int T = charges_.T;
  const std::int64_t g = mod(b - a, T);
  const std::int64_t x0 = first_in_class_after(x_max_, g, T);
  const double first = residue_power_tail(x0, T, 0.5, rate);
  const double second = residue_power_tail(x0, T, 0.5, rate + h_);
  return kappa_surv_ * 0.5 * (first + std::exp(sigma_.sigma(a, b)) * second);
}

}  // namespace copoly
