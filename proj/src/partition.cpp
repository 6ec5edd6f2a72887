#include "copoly/partition.hpp"

#include <cmath>

#include "copoly/error.hpp"

namespace copoly {

namespace {

bool healthy(double v) { return std::isfinite(v) && v > 1e-290 && v < 1e290; }

// Linear recursion on e^{-tilt n} Z(n). Returns false on overflow or
// underflow so the caller can redo the shift in the log domain.
bool build_scaled(const KernelBundle& bundle, int k, std::int64_t N,
                  double tilt, std::vector<double>& logZc,
                  std::vector<double>& logZf) {
  const int T = bundle.T();
  std::vector<std::vector<double>> mhat(T), ghat(T);
  for (int a = 0; a < T; ++a) {
    mhat[a].assign(static_cast<std::size_t>(N) + 1, 0.0);
    ghat[a].assign(static_cast<std::size_t>(N) + 1, 0.0);
    ghat[a][0] = 1.0;
    for (std::int64_t x = 1; x <= N; ++x) {
      const double damp = -tilt * static_cast<double>(x);
      mhat[a][x] = std::exp(bundle.log_m(a, x) + damp);
      ghat[a][x] = std::exp(bundle.log_free_tail_weight(a, x) + damp);
    }
  }
  std::vector<double> z(static_cast<std::size_t>(N) + 1, 0.0);
  z[0] = 1.0;
  for (std::int64_t n = 1; n <= N; ++n) {
    double acc = 0.0;
    for (std::int64_t y = 0; y < n; ++y) {
      acc += z[y] * mhat[(k + y) % T][n - y];
    }
    if (!healthy(acc)) return false;
    z[n] = acc;
  }
  for (std::int64_t n = 0; n <= N; ++n) {
    double acc = 0.0;
    for (std::int64_t t = 0; t <= n; ++t) {
      acc += z[t] * ghat[(k + t) % T][n - t];
    }
    if (!healthy(acc)) return false;
    const double shift = tilt * static_cast<double>(n);
    logZc[n] = std::log(z[n]) + shift;
    logZf[n] = std::log(acc) + shift;
  }
  return true;
}

void build_log(const KernelBundle& bundle, int k, std::int64_t N,
               std::vector<double>& logZc, std::vector<double>& logZf) {
  const int T = bundle.T();
  std::vector<std::vector<double>> lm(T), lg(T);
  for (int a = 0; a < T; ++a) {
    lm[a].assign(static_cast<std::size_t>(N) + 1, kNegInf);
    lg[a].assign(static_cast<std::size_t>(N) + 1, 0.0);
    for (std::int64_t x = 1; x <= N; ++x) {
      lm[a][x] = bundle.log_m(a, x);
      lg[a][x] = bundle.log_free_tail_weight(a, x);
    }
  }
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(N) + 1);
  logZc[0] = 0.0;
  for (std::int64_t n = 1; n <= N; ++n) {
    terms.clear();
    for (std::int64_t y = 0; y < n; ++y) {
      terms.push_back(logZc[y] + lm[(k + y) % T][n - y]);
    }
    logZc[n] = log_sum_exp(terms);
  }
  for (std::int64_t n = 0; n <= N; ++n) {
    terms.clear();
    for (std::int64_t t = 0; t <= n; ++t) {
      terms.push_back(logZc[t] + lg[(k + t) % T][n - t]);
    }
    logZf[n] = log_sum_exp(terms);
  }
}

}  // namespace

PartitionTable::PartitionTable(const KernelBundle& bundle, std::int64_t N,
                               double tilt, DpMode mode)
    : T_(bundle.T()), N_(N) {
  require(N >= 0, "horizon N must be >= 0");
  require(N <= bundle.x_max(), "horizon N exceeds X_max");
  require(std::isfinite(tilt), "tilt must be finite");
  logZc_.assign(T_, std::vector<double>(static_cast<std::size_t>(N) + 1, 0.0));
  logZf_.assign(T_, std::vector<double>(static_cast<std::size_t>(N) + 1, 0.0));
  for (int k = 0; k < T_; ++k) {
    if (mode == DpMode::Auto &&
        build_scaled(bundle, k, N, tilt, logZc_[k], logZf_[k])) {
      continue;
    }
    if (mode == DpMode::Auto) ++fallbacks_;
    build_log(bundle, k, N, logZc_[k], logZf_[k]);
  }
}

double PartitionTable::log_constrained(std::int64_t k, std::int64_t n) const {
  require(n >= 0 && n <= N_, "Z_constrained: n out of range");
  return logZc_[mod(k, T_)][n];
}

double PartitionTable::log_free(std::int64_t k, std::int64_t n) const {
  require(n >= 0 && n <= N_, "Z_free: n out of range");
  return logZf_[mod(k, T_)][n];
}

}  // namespace copoly
