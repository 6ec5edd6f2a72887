#pragma once

#include <cstdint>
#include <vector>

#include "copoly/numeric.hpp"

namespace copoly {

/// Element of Z/TZ.
class Residue {
 public:
  Residue(std::int64_t value, int modulus)
      : value_(static_cast<int>(mod(value, modulus))), modulus_(modulus) {}

  int value() const { return value_; }
  int modulus() const { return modulus_; }

  Residue operator+(std::int64_t k) const { return {value_ + k, modulus_}; }
  Residue operator-(std::int64_t k) const { return {value_ - k, modulus_}; }
  Residue operator+(Residue o) const { return {value_ + o.value_, modulus_}; }
  Residue operator-(Residue o) const { return {value_ - o.value_, modulus_}; }
  bool operator==(const Residue&) const = default;

 private:
  int value_;
  int modulus_;
};

struct Tolerances {
  double h_zero = 1e-12;      // |h| below this counts as h = 0
  double sigma_zero = 1e-12;  // |Sigma| below this counts as Sigma = 0
  double critical = 1e-9;     // |delta - 1| below this counts as critical
};

/// Periodic charges. Arrays hold the values at epochs n = 1..T, so the
/// value at epoch n is arr[(n - 1) mod T] and the value at residue r is
/// arr[(r - 1) mod T].
struct ChargeSet {
  int T = 0;
  std::vector<double> omega_plus;
  std::vector<double> omega_minus;
  std::vector<double> omega_zero;
  std::vector<double> omega_zero_tilde;
  bool canonical = false;
  /// Set by canonicalize when it exchanged omega_plus and omega_minus
  /// (h < 0). Paths of the canonical model are then mirror images.
  bool swapped = false;
  /// Per-epoch omega_plus removed by canonicalize (after the optional swap),
  /// in the same layout as the charge arrays. Zero for canonical input.
  std::vector<double> removed_plus;

  static ChargeSet zeros(int T);

  double plus_at_epoch(std::int64_t n) const { return omega_plus[idx(n)]; }
  double minus_at_epoch(std::int64_t n) const { return omega_minus[idx(n)]; }
  double zero_at_epoch(std::int64_t n) const { return omega_zero[idx(n)]; }
  double zero_tilde_at_epoch(std::int64_t n) const {
    return omega_zero_tilde[idx(n)];
  }

  double plus_at(Residue r) const { return plus_at_epoch(r.value()); }
  double minus_at(Residue r) const { return minus_at_epoch(r.value()); }
  double zero_at(Residue r) const { return zero_at_epoch(r.value()); }
  double zero_tilde_at(Residue r) const {
    return zero_tilde_at_epoch(r.value());
  }

  /// Throws InvalidInput unless T >= 1 and all arrays have length T with
  /// finite entries.
  void validate() const;

 private:
  std::size_t idx(std::int64_t n) const {
    return static_cast<std::size_t>(mod(n - 1, T));
  }
};

struct SigmaMatrix {
  Matrix sigma;      // T x T
  Vector potential;  // v_a = Sigma_{0,a}
};

ChargeSet canonicalize(const ChargeSet& raw);

/// Mean of (omega_plus - omega_minus) over one period.
double compute_h(const ChargeSet& c);

/// Sigma_{a,b} from partial sums over representatives n1 = a and the
/// smallest n2 >= n1 in class b.
SigmaMatrix compute_sigma(const ChargeSet& c);

bool is_zero_h(const ChargeSet& c, const Tolerances& tol = {});
bool is_zero_sigma(const SigmaMatrix& s, const Tolerances& tol = {});

bool in_P(const ChargeSet& c, double delta, const Tolerances& tol = {});

}  // namespace copoly
