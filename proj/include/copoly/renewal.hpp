#pragma once

#include <cstdint>
#include <vector>

#include "copoly/rng.hpp"
#include "copoly/spectral.hpp"

namespace copoly {

struct RenewalTrajectory {
  std::vector<int> J;             // modulating chain, J[0] = start
  std::vector<std::int64_t> tau;  // renewal epochs, tau[0] = 0
};

/// Draws steps (x, b) from Gamma. Steps beyond x_max come from the
/// x^{-3/2} tail by rejection from a discretized Pareto proposal.
class RenewalSampler {
 public:
  explicit RenewalSampler(const SemiMarkovKernel& gamma,
                          const KernelBundle& bundle);

  struct Step {
    std::int64_t x;
    int to;
  };
  Step step(int from, Rng& rng) const;

  RenewalTrajectory trajectory(int start, std::int64_t horizon, Rng& rng) const;

 private:
  std::int64_t tail_step(int from, int to, Rng& rng) const;

  const SemiMarkovKernel& gamma_;
  const KernelBundle& bundle_;
  std::vector<std::vector<double>> cdf_;  // cumulative table mass per row
  std::vector<double> table_mass_;
  std::vector<double> tail_mass_;
};

RenewalTrajectory sample_trajectory(const SemiMarkovKernel& gamma,
                                    const KernelBundle& bundle, int start,
                                    std::int64_t horizon, std::uint64_t seed,
                                    std::uint64_t stream = 0);

struct GreenTable {
  int T = 1;
  std::int64_t N = 0;
  /// U[a][n] = U_{a, a+[n]}(n).
  std::vector<std::vector<double>> U;
  /// Qsurv[a][t] = sum_b sum_{s > t} Gamma_{a,b}(s), tail included.
  std::vector<std::vector<double>> Qsurv;

  double at(int a, std::int64_t n) const { return U[a][n]; }
};

GreenTable green_function(const SemiMarkovKernel& gamma, std::int64_t N);

/// Law of the first return time to residue beta; q[x] = 0 unless [x] = 0.
std::vector<double> q_beta(const SemiMarkovKernel& gamma, int beta,
                           std::int64_t N);

struct CBeta {
  double value = 0.0;       // (1/(zeta_b xi_b)) sum zeta_a L_ag xi_g
  double via_lhat = 0.0;    // (1/nu_b) sum nu_a Lhat_ag
  double via_matrix = 0.0;  // [(1 - Bhat^(b))^{-1} Lhat (1 - Bhat^(b))^{-1} Bhat]_bb
};

CBeta c_beta(const SpectralData& s, const KernelBundle& bundle, int beta);

struct DoneyRow {
  std::int64_t x = 0;
  double ratio = 0.0;
};

/// sqrt(x) U_{a,b}(x) 2 pi c_b / T^2 along [x] = b - a. Requires the
/// critical regime.
std::vector<DoneyRow> doney_check(const GreenTable& green, const SpectralData& s,
                                  double c_b, int a, int b,
                                  const std::vector<std::int64_t>& xs);

/// Largest residual of the two visit identities over all gamma for a
/// stochastic irreducible Q:
///   [(1 - Q^(g))^{-1}]_{g,a} = nu_a / nu_g,  [(1 - Q^(g))^{-1} Q]_{a,g} = 1.
double visit_identity_residual(const Matrix& Q);

}  // namespace copoly
