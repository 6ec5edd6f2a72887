#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "copoly/partition.hpp"
#include "copoly/spectral.hpp"

namespace copoly {

enum class Regime { Localized, Critical, Delocalized };

std::string to_string(Regime r);

Regime classify(const SpectralData& s, double eps);

/// Sharp constants per boundary residue eta. Vectors are empty when the
/// constant is not defined in the regime.
struct RegimeReport {
  Regime regime = Regime::Critical;
  double delta = 0.0, F = 0.0, mu = kInf;
  std::vector<double> Cgt, Ceq, Clt;        // constrained
  std::vector<double> Cgt_f, Ceq_f, Clt_f;  // free
  /// Infinity-norm condition number of (1 - B); delocalized only.
  double condition = 0.0;
  double tail_error = 0.0;
  bool in_P = false;
  Tolerances tol;
};

RegimeReport constants(const SpectralData& s, const KernelBundle& bundle);

/// (1 - B)^{-1}; requires delta < 1.
Matrix resolvent(const KernelBundle& bundle, const SpectralData& s);

struct ConvergenceRow {
  std::int64_t N = 0;
  double log_Z = 0.0;
  double log_prediction = 0.0;
  double ratio = 0.0;
};

struct ConvergenceTable {
  Endpoint endpoint = Endpoint::Constrained;
  int eta = 0;
  std::vector<ConvergenceRow> rows;
  /// |ratio - 1| is nonincreasing along the rows.
  bool monotone = true;
};

ConvergenceTable verify_asymptotics(const RegimeReport& report,
                                    const PartitionTable& table, int eta,
                                    const std::vector<std::int64_t>& N_list,
                                    Endpoint endpoint);

struct LocalizationCheck {
  double delta = 0.0;     // Perron value of B from the kernel bundle
  double z_B = 0.0;       // same, from the closed form in terms of q
  double z_Btilde = 0.0;  // after (1 + e^x)/2 >= e^{x/2}
  double z_Bhat = 0.0;    // after the second convexity bound
  double z_C = 0.0;       // similarity transform of B-hat
  bool chain_holds = false;
  /// Minimum second difference of log eta(t) on the interpolation grid.
  double kingman_min_second_difference = 0.0;
  std::vector<double> kingman_log_eta;
  bool kingman_convex = false;
  bool localized = false;
};

/// Zero-mean copolymer check on canonical charges (omega_zero = 0,
/// omega_zero_tilde = 0, h = 0, Sigma != 0). Throws InvalidInput otherwise.
LocalizationCheck copolymer_localization_check(const ChargeSet& c,
                                               const ReturnLaw& r,
                                               std::int64_t x_max);

}  // namespace copoly
