#pragma once

#include <cstdint>
#include <vector>

#include "copoly/charges.hpp"

namespace copoly {

enum class Endpoint { Constrained, Free };

/// Lazy walk: steps +1 and -1 with probability p each, 0 with 1 - 2p.
struct WalkModel {
  double p = 0.3;

  explicit WalkModel(double p_);
  double sigma2() const { return 2.0 * p; }
};

struct ReturnLaw {
  double p = 0.0;
  std::int64_t n_max = 0;
  std::vector<double> K;      // K[n] = P(tau_1 = n), K[0] = 0
  std::vector<double> Psurv;  // Psurv[n] = P(tau_1 > n) = 1 - sum_{k<=n} K[k]
  double cK = 0.0;            // lim n^{3/2} K[n]
};

/// First-return law up to n_max. K is evaluated with the three-term
/// recurrence of its generating function 1 - sqrt(1 - 2(1-2p)s + (1-4p)s^2),
/// which is exact up to rounding. cK is extrapolated from an internal run of
/// length max(n_max, 2^17).
ReturnLaw return_law(const WalkModel& w, std::int64_t n_max);

/// Same K, computed by the positive-bridge height DP in O(n_max^2). Kept as
/// an independent check of the recurrence; cK is left at 0.
ReturnLaw return_law_bridge_dp(const WalkModel& w, std::int64_t n_max);

/// Two-level Richardson extrapolation of n^{3/2} K[n] over n, 2n, 4n at
/// n = n_max / 4. Requires n_max >= 10^4.
double estimate_cK(const ReturnLaw& r);

/// P(S_n = 0) for n = 0..n_max.
std::vector<double> bridge_probabilities(const WalkModel& w,
                                         std::int64_t n_max);

/// log Z_N by a transfer DP over heights in [-N, N]. Takes canonical or raw
/// charges; for raw charges this is the partition function of the unshifted
/// Hamiltonian.
double height_partition_oracle(const ChargeSet& c, const WalkModel& w,
                               std::int64_t N, Endpoint endpoint);

}  // namespace copoly
