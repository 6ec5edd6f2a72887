#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "copoly/asymptotics.hpp"
#include "copoly/rng.hpp"

namespace copoly {

struct ZeroSet {
  std::vector<std::int64_t> tau;  // returns in 1..N, increasing
  std::int64_t iota() const { return static_cast<std::int64_t>(tau.size()); }
};

struct PolymerSample {
  std::int64_t N = 0;
  Endpoint endpoint = Endpoint::Constrained;
  ZeroSet zeros;
  /// One sign per excursion, including a final incomplete one in the free
  /// case; 0 marks a flat step along the interface.
  std::vector<int> signs;
  /// S_N (free case; 0 when constrained).
  std::int64_t end_height = 0;
  /// Full path S_0..S_N when requested, empty otherwise.
  std::vector<std::int64_t> heights;
};

/// Shapes of excursions of the lazy walk, conditioned on their length.
class ExcursionSampler {
 public:
  explicit ExcursionSampler(double p);

  /// Positive excursion of length l >= 2: S_0 = S_l = 0, S_i > 0 inside.
  /// Writes l + 1 heights.
  void excursion(std::int64_t l, Rng& rng, std::vector<std::int64_t>& out);
  /// Positive meander of length l >= 1: S_0 = 0, S_i > 0 for 1 <= i <= l.
  void meander(std::int64_t l, Rng& rng, std::vector<std::int64_t>& out);
  /// Only the final height of a positive meander of length l >= 1.
  std::int64_t meander_endpoint(std::int64_t l, Rng& rng);

 private:
  std::int64_t excursion_flats(std::int64_t m, Rng& rng);
  std::int64_t meander_flats(std::int64_t m, Rng& rng);
  std::int64_t meander_lift(std::int64_t k, Rng& rng);
  /// Nonnegative +-1 path from 0 to j with k steps, uniform.
  void nonnegative_path(std::int64_t k, std::int64_t j, Rng& rng,
                        std::vector<int>& steps);
  void assemble(std::int64_t m, std::int64_t f, const std::vector<int>& steps,
                Rng& rng, std::vector<std::int64_t>& out);

  double p_, r_;
  std::map<std::int64_t, std::vector<double>> flat_cdf_;
  std::vector<int> steps_;
  std::vector<std::int64_t> slots_;
};

/// Exact sampler for the polymer measure of length N. Not thread-safe; give
/// each worker its own instance (they share the read-only tables).
class PolymerSampler {
 public:
  PolymerSampler(const KernelBundle& bundle, const PartitionTable& table,
                 Endpoint endpoint, std::int64_t N);

  /// Path of the model as given; mirrored back if canonicalization
  /// exchanged the two sides.
  PolymerSample sample(Rng& rng, bool full_path);

  /// Probability of one sign given an excursion of length l from epoch t.
  double rho_plus(std::int64_t t, std::int64_t l) const;

 private:
  PolymerSample draw(Rng& rng, bool full_path);

  const KernelBundle& bundle_;
  const PartitionTable& table_;
  Endpoint endpoint_;
  std::int64_t N_;
  std::vector<std::vector<double>> log_m_, log_g_;
  ExcursionSampler shapes_;
};

PolymerSample sample_path(const KernelBundle& bundle,
                          const PartitionTable& table, Endpoint endpoint,
                          std::int64_t N, std::uint64_t seed,
                          std::uint64_t stream = 0, bool full_path = true);

struct SignConstants {
  std::vector<double> p_c;     // delocalized, per eta
  std::vector<double> p_f;     // delocalized, per eta
  std::optional<double> p_crit;
  std::vector<double> q_crit;  // critical, per eta

  /// Free critical sign probability at macroscopic time t in [0, 1].
  double p_f_of_t(double t, int eta) const;
};

SignConstants sign_constants(const SpectralData& s, const KernelBundle& bundle,
                             const RegimeReport& report);

/// Per-sample functionals used by the scaling statistics.
struct SampleSummary {
  std::int64_t G_N = 0;       // last zero <= N
  std::int64_t G_half = 0;    // last zero <= N/2
  std::int64_t D_half = 0;    // first zero >= N/2, N + 1 if none
  std::int64_t end_abs = 0;   // |S_N|
  int end_sign = 0;           // sign of S_N
  std::int64_t max_abs = -1;  // max |S_n|, -1 if the path was not kept
  std::int64_t max_gap = 0;   // longest excursion, the final one included
  std::vector<signed char> side;  // sign of S_{floor(t N)} on the t grid
};

SampleSummary summarize(const PolymerSample& s, const std::vector<double>& t_grid);

struct StatOptions {
  std::vector<double> t_grid{0.25, 0.5, 0.75};
  std::vector<std::int64_t> L_grid{4, 8, 16, 32, 64};
  std::vector<double> C_grid{0.5, 1.0, 1.5, 2.0};  // multiples of 1/F
  double sigma = 0.0;  // sqrt(2p)
  double F = 0.0;
  std::optional<SignConstants> signs;
  int eta = 0;
};

struct StatReport {
  Regime regime = Regime::Critical;
  Endpoint endpoint = Endpoint::Constrained;
  std::int64_t N = 0;
  std::int64_t samples = 0;
  // Localized: P(max |S| > C log N / F) and the same for the longest gap
  // between consecutive zeros, which dominates max |S|.
  std::vector<double> max_exceedance, max_gap_exceedance;
  // Delocalized: tail probabilities on L_grid and the envelope check.
  std::vector<double> p_G_N, p_G_half, p_D_half;
  double envelope_constant = 0.0;
  bool envelope_holds = false;
  // Sign frequencies of S_{floor(tN)} on t_grid and of S_N, with standard
  // errors and the limiting constant where one is defined (NaN otherwise).
  // The *_nonzero variants condition on S != 0; at finite N the atom at 0
  // biases the raw frequency below its limit by about P(S = 0) / 2.
  std::vector<double> positive_freq, positive_stderr, positive_reference;
  std::vector<double> positive_freq_nonzero, positive_stderr_nonzero;
  double end_positive_freq = 0.0, end_positive_stderr = 0.0;
  double end_positive_freq_nonzero = 0.0, end_positive_stderr_nonzero = 0.0;
  double end_positive_reference = 0.0;
  // Critical, free endpoint only.
  double ks_last_zero_arcsine = -1.0;
  double ks_endpoint_half_normal = -1.0;
  double ks_endpoint_meander = -1.0;
  StatOptions options;
};

StatReport scaling_statistics(const std::vector<SampleSummary>& samples,
                              Endpoint endpoint, Regime regime, std::int64_t N,
                              const StatOptions& options);

struct GapBoundResult {
  bool holds = true;
  double worst_ratio = 0.0;  // max P(gap) / Khat
  std::int64_t checked = 0;
};

/// Exhaustive check of P(S_k = S_{k+n} = 0, no zero between) <= Khat_k(n)
/// for all k, n with k + n <= N, both endpoints.
GapBoundResult gap_bound_check(const KernelBundle& bundle,
                               const PartitionTable& table, std::int64_t N);

/// Khat_k(n) of the gap bound.
double gap_bound_khat(const KernelBundle& bundle, const PartitionTable& table,
                      std::int64_t k, std::int64_t n);

}  // namespace copoly
