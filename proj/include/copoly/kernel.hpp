#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "copoly/charges.hpp"
#include "copoly/walk.hpp"

namespace copoly {

/// Integrated Hamiltonian of an excursion of length l from residue a to b.
/// nullopt when [l] != b - a.
std::optional<double> phi(const ChargeSet& c, Residue a, Residue b,
                          std::int64_t l);

/// Same for a final, incomplete excursion: no pinning reward at the end and,
/// for l = 1, the single step is free to go either way.
/// phi_tilde(l = 0) = 0; phi_tilde(l) = log[(1 + exp(-l h + Sigma_ab)) / 2]
/// for l >= 1 with [l] = b - a.
std::optional<double> phi_tilde(const ChargeSet& c, Residue a, Residue b,
                                std::int64_t l);

/// A kernel with the periodic sparsity pattern F_{a,b}(x) = 0 unless
/// [x] = b - a, stored as v[a][x] = F_{a, a+[x]}(x) for x = 0..x_max.
struct PeriodicKernel {
  int T = 1;
  std::int64_t x_max = 0;
  std::vector<std::vector<double>> v;

  static PeriodicKernel identity(int T, std::int64_t x_max);
  double at(int a, std::int64_t x) const { return v[a][x]; }
  /// Dense T x T matrix F(x).
  Matrix matrix(std::int64_t x) const;
  /// Sum over x <= x_max of F(x).
  Matrix total() const;
};

/// Full convolution (F * G)(x) for x <= F.x_max + G.x_max.
PeriodicKernel convolve(const PeriodicKernel& F, const PeriodicKernel& G);

/// (F * G)(x) as a dense matrix, O(x T) work.
Matrix convolve_at(const PeriodicKernel& F, const PeriodicKernel& G,
                   std::int64_t x);

class KernelBundle {
 public:
  KernelBundle(const ChargeSet& c, const ReturnLaw& r, std::int64_t x_max,
               const Tolerances& tol = {});

  int T() const { return charges_.T; }
  std::int64_t x_max() const { return x_max_; }
  double h() const { return h_; }
  double p() const { return p_; }
  double cK() const { return cK_; }
  bool h_is_zero() const { return h_zero_; }
  const ChargeSet& charges() const { return charges_; }
  const Tolerances& tolerances() const { return tol_; }
  const SigmaMatrix& sigma() const { return sigma_; }

  /// M_{a, a+[x]}(x) for 1 <= x <= x_max; 0 for x = 0.
  double m(int a, std::int64_t x) const { return M_[a][x]; }
  const std::vector<double>& m_row(int a) const { return M_[a]; }
  /// log M_{a, a+[x]}(x), finite even where M underflows.
  double log_m(int a, std::int64_t x) const;
  const PeriodicKernel& kernel() const { return kernel_; }

  /// Survival P(l) for 0 <= l <= x_max.
  double survival(std::int64_t l) const { return Psurv_[l]; }
  /// K(l) for 0 <= l <= x_max.
  double first_return(std::int64_t l) const { return K_[l]; }

  const Matrix& B() const { return B_; }
  const Matrix& L() const { return L_; }
  const Matrix& Ltilde() const { return Ltilde_; }
  double tail_error() const { return tail_error_; }

  /// sum_{x > x_max} M_{a,b}(x) e^{-b x}, completed with the x^{-3/2} tail.
  Matrix tail(double rate) const;
  /// sum_{x > x_max} x M_{a,b}(x) e^{-b x}, completed with the tail.
  Matrix tail_first_moment(double rate) const;
  /// A^rate = sum_x M(x) e^{-rate x}, tail-completed.
  Matrix tilted_sum(double rate) const;

  /// G_a(l) = P(l) exp(phi_tilde_{a, a+[l]}(l)), the weight of a last
  /// incomplete excursion of length l started at residue a. l <= x_max.
  double free_tail_weight(int a, std::int64_t l) const;
  double log_free_tail_weight(int a, std::int64_t l) const;
  /// sum_{l > x_max, [l] = b - a} e^{-rate l} G_a(l), completed with
  /// P(l) ~ P(x_max) sqrt(x_max / l).
  double free_tail_weight_tail(int a, int b, double rate) const;

 private:
  double tail_entry(int a, int b, double rate, double s) const;
  double log_phi(int a, std::int64_t x) const;

  ChargeSet charges_;
  Tolerances tol_;
  std::int64_t x_max_;
  double p_, h_, cK_;
  bool h_zero_;
  SigmaMatrix sigma_;
  std::vector<double> K_, Psurv_;
  std::vector<std::vector<double>> M_;
  PeriodicKernel kernel_;
  double kappa_ = 0.0;  // tail matching constant: K(x) ~ kappa x^{-3/2}
  double kappa_surv_ = 0.0;  // P(x) ~ kappa_surv x^{-1/2}
  Matrix B_, L_, Ltilde_;
  double tail_error_ = 0.0;
};

}  // namespace copoly
