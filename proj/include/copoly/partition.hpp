#pragma once

#include <cstdint>
#include <vector>

#include "copoly/kernel.hpp"

namespace copoly {

enum class DpMode {
  Auto,     // scaled linear recursion, falls back to log domain if needed
  LogOnly,  // log-domain recursion throughout
};

class PartitionTable {
 public:
  /// Builds log Z^c and log Z^f for every shift k in [0, T) and length
  /// n in [0, N]. `tilt` rescales the linear recursion by e^{-tilt n}; pass
  /// the free energy to keep localized tables in floating range.
  PartitionTable(const KernelBundle& bundle, std::int64_t N, double tilt = 0.0,
                 DpMode mode = DpMode::Auto);

  int T() const { return T_; }
  std::int64_t N() const { return N_; }

  /// log Z^c_{n, theta_k omega}.
  double log_constrained(std::int64_t k, std::int64_t n) const;
  /// log Z^f_{n, theta_k omega}.
  double log_free(std::int64_t k, std::int64_t n) const;
  double log_partition(Endpoint a, std::int64_t k, std::int64_t n) const {
    return a == Endpoint::Constrained ? log_constrained(k, n) : log_free(k, n);
  }
  /// Number of shifts whose table needed the log-domain path.
  int log_fallbacks() const { return fallbacks_; }

 private:
  int T_;
  std::int64_t N_;
  std::vector<std::vector<double>> logZc_, logZf_;
  int fallbacks_ = 0;
};

}  // namespace copoly
