#pragma once

#include <cstdint>
#include <vector>

#include "copoly/kernel.hpp"

namespace copoly {

struct PerronResult {
  double value = 0.0;
  Vector left;   // zeta, zeta Q = value zeta
  Vector right;  // xi, Q xi = value xi
};

/// Perron-Frobenius eigenvalue and eigenvectors of a nonnegative irreducible
/// matrix, normalized so that <left, right> = 1 and sum(right) = T.
PerronResult perron(const Matrix& Q, int max_iters = 200000);

/// True if the directed graph of the positive entries of Q is strongly
/// connected.
bool is_irreducible(const Matrix& Q);

/// Perron eigenvalue of A^b = sum_x M(x) e^{-bx}.
double delta_of_b(const KernelBundle& bundle, double b);

struct SpectralData {
  double delta = 0.0;
  double F = 0.0;
  Vector zeta, xi, nu;
  double mu = kInf;
  bool critical = false;
  /// Residual max |A^F xi - xi|, max |zeta A^F - zeta| after normalization.
  double residual = 0.0;
  /// A^F itself, kept for residual checks.
  Matrix tilted;
};

SpectralData free_energy(const KernelBundle& bundle);

/// sum_{a,b,x} x e^{-Fx} zeta_a M_{a,b}(x) xi_b, tail-completed. +inf at
/// criticality.
double mean_mu(const SpectralData& s, const KernelBundle& bundle);

struct SemiMarkovKernel {
  int T = 1;
  std::int64_t x_max = 0;
  double F = 0.0;
  /// g[a][x] = Gamma_{a, a+[x]}(x) for x <= x_max.
  std::vector<std::vector<double>> g;
  /// Mass beyond x_max, per start residue a and end residue b.
  Matrix tail;
  /// Row mass deficit per a: 1 - sum over the table.
  std::vector<double> deficit;

  double at(int a, std::int64_t x) const { return g[a][x]; }
  /// Q = sum_x Gamma(x), tail included.
  Matrix embedded_chain() const;
};

SemiMarkovKernel gamma_kernel(const SpectralData& s, const KernelBundle& bundle);

}  // namespace copoly
