#include "copoly/walk.hpp"

#include <algorithm>
#include <cmath>

#include "copoly/error.hpp"

namespace copoly {

WalkModel::WalkModel(double p_) : p(p_) {
  require(p > 0.0 && p < 0.5, "walk parameter p must lie in (0, 1/2)");
}

namespace {

void fill_survival(ReturnLaw& r) {
  r.Psurv.assign(r.K.size(), 1.0);
  double acc = 0.0;
  for (std::size_t n = 1; n < r.K.size(); ++n) {
    acc += r.K[n];
    r.Psurv[n] = 1.0 - acc;
  }
}

// K via n f_n = b(2n-3) f_{n-1} - c(n-3) f_{n-2}, the coefficients of
// sqrt(1 - 2bs + cs^2) with b = 1-2p, c = 1-4p; K_n = -f_n for n >= 1.
std::vector<double> first_return_recurrence(double p, std::int64_t n_max) {
  const double b = 1.0 - 2.0 * p;
  const double c = 1.0 - 4.0 * p;
  std::vector<double> K(static_cast<std::size_t>(n_max) + 1, 0.0);
  double f_prev2 = 1.0;  // f_0
  double f_prev1 = -b;   // f_1
  if (n_max >= 1) K[1] = b;
  for (std::int64_t n = 2; n <= n_max; ++n) {
    const double nd = static_cast<double>(n);
    const double f =
        (b * (2.0 * nd - 3.0) * f_prev1 - c * (nd - 3.0) * f_prev2) / nd;
    K[n] = -f;
    f_prev2 = f_prev1;
    f_prev1 = f;
  }
  return K;
}

}  // namespace

ReturnLaw return_law(const WalkModel& w, std::int64_t n_max) {
  require(n_max >= 1, "N_max must be >= 1");
  constexpr std::int64_t kExtrapolationLength = 1 << 17;
  ReturnLaw ext;
  ext.p = w.p;
  ext.n_max = std::max(n_max, kExtrapolationLength);
  ext.K = first_return_recurrence(w.p, ext.n_max);
  const double cK = estimate_cK(ext);

  ReturnLaw r;
  r.p = w.p;
  r.n_max = n_max;
  r.K.assign(ext.K.begin(), ext.K.begin() + n_max + 1);
  fill_survival(r);
  r.cK = cK;
  return r;
}

ReturnLaw return_law_bridge_dp(const WalkModel& w, std::int64_t n_max) {
  require(n_max >= 1, "N_max must be >= 1");
  const double p = w.p;
  const double q = 1.0 - 2.0 * p;
  ReturnLaw r;
  r.p = p;
  r.n_max = n_max;
  r.K.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  r.K[1] = q;
  // dist[h] = P(walk from height 1 stays >= 1 for m steps, at height h).
  std::vector<double> dist(static_cast<std::size_t>(n_max) + 2, 0.0);
  std::vector<double> next(dist.size(), 0.0);
  dist[1] = 1.0;
  for (std::int64_t n = 2; n <= n_max; ++n) {
    const std::int64_t m = n - 2;  // steps taken so far
    r.K[n] = 2.0 * p * p * dist[1];
    const std::int64_t top = std::min<std::int64_t>(m + 2, n_max);
    std::fill(next.begin(), next.begin() + top + 1, 0.0);
    for (std::int64_t h = 1; h <= m + 1 && h <= n_max; ++h) {
      const double v = dist[h];
      if (v == 0.0) continue;
      next[h] += q * v;
      if (h + 1 <= top) next[h + 1] += p * v;
      if (h - 1 >= 1) next[h - 1] += p * v;
    }
    std::swap(dist, next);
  }
  fill_survival(r);
  return r;
}

double estimate_cK(const ReturnLaw& r) {
  require(r.n_max >= 10000, "estimate_cK needs N_max >= 10^4");
  const std::int64_t n = r.n_max / 4;
  auto a = [&](std::int64_t k) {
    return std::pow(static_cast<double>(k), 1.5) * r.K[k];
  };
  const double a1 = a(n), a2 = a(2 * n), a4 = a(4 * n);
  if (!(std::abs(a4 - a2) < std::abs(a2 - a1))) {
    fail(ErrorCode::NumericalFailure,
         "n^{3/2} K(n) is not converging; cannot extrapolate c_K");
  }
  return (8.0 * a4 - 6.0 * a2 + a1) / 3.0;
}

std::vector<double> bridge_probabilities(const WalkModel& w,
                                         std::int64_t n_max) {
  require(n_max >= 0, "n_max must be >= 0");
  // n u_n = (2n-1) b u_{n-1} - (n-1) c u_{n-2}, from (1-2bs+cs^2)^{-1/2}.
  const double b = 1.0 - 2.0 * w.p;
  const double c = 1.0 - 4.0 * w.p;
  std::vector<double> u(static_cast<std::size_t>(n_max) + 1, 0.0);
  u[0] = 1.0;
  if (n_max >= 1) u[1] = b;
  for (std::int64_t n = 2; n <= n_max; ++n) {
    const double nd = static_cast<double>(n);
    u[n] = ((2.0 * nd - 1.0) * b * u[n - 1] - (nd - 1.0) * c * u[n - 2]) / nd;
  }
  return u;
}

double height_partition_oracle(const ChargeSet& c, const WalkModel& w,
                               std::int64_t N, Endpoint endpoint) {
  c.validate();
  require(N >= 1, "N must be >= 1");
  const std::size_t width = static_cast<std::size_t>(2 * N + 1);
  const std::int64_t off = N;
  const double p = w.p;
  const double q = 1.0 - 2.0 * p;
  std::vector<double> cur(width, 0.0), nxt(width, 0.0);
  cur[off] = 1.0;
  double log_scale = 0.0;

  for (std::int64_t n = 1; n <= N; ++n) {
    const double e_plus = std::exp(c.plus_at_epoch(n));
    const double e_minus = std::exp(c.minus_at_epoch(n));
    const double e_flat = std::exp(c.zero_tilde_at_epoch(n));
    const double e_pin = std::exp(c.zero_at_epoch(n));
    std::fill(nxt.begin(), nxt.end(), 0.0);
    const std::int64_t reach = std::min(n - 1, N);
    for (std::int64_t h = -reach; h <= reach; ++h) {
      const double v = cur[h + off];
      if (v == 0.0) continue;
      for (int step = -1; step <= 1; ++step) {
        const std::int64_t g = h + step;
        double wgt = step == 0 ? q : p;
        if (g > 0 || (g == 0 && h > 0)) {
          wgt *= e_plus;
        } else if (g < 0 || (g == 0 && h < 0)) {
          wgt *= e_minus;
        } else {
          wgt *= e_flat;
        }
        if (g == 0) wgt *= e_pin;
        nxt[g + off] += v * wgt;
      }
    }
    double m = 0.0;
    for (double v : nxt) m = std::max(m, v);
    if (m == 0.0) return kNegInf;
    for (double& v : nxt) v /= m;
    log_scale += std::log(m);
    std::swap(cur, nxt);
  }
  if (endpoint == Endpoint::Constrained) {
    return cur[off] > 0.0 ? log_scale + std::log(cur[off]) : kNegInf;
  }
  double total = 0.0;
  for (double v : cur) total += v;
  return log_scale + std::log(total);
}

}  // namespace copoly
