#include "copoly/spectral.hpp"

#include <cmath>

#include "copoly/error.hpp"

namespace copoly {

bool is_irreducible(const Matrix& Q) {
  const int T = static_cast<int>(Q.rows());
  // Boolean transitive closure (T is small).
  std::vector<std::vector<char>> reach(T, std::vector<char>(T, 0));
  for (int i = 0; i < T; ++i)
    for (int j = 0; j < T; ++j) reach[i][j] = Q(i, j) > 0.0;
  for (int k = 0; k < T; ++k)
    for (int i = 0; i < T; ++i)
      if (reach[i][k])
        for (int j = 0; j < T; ++j)
          if (reach[k][j]) reach[i][j] = 1;
  if (T == 1) return true;
  for (int i = 0; i < T; ++i)
    for (int j = 0; j < T; ++j)
      if (!reach[i][j]) return false;
  return true;
}

namespace {

// Dominant eigenpair of a nonnegative irreducible matrix acting on the right.
// Power iteration on Q + sI (aperiodic even if Q is periodic), then a few
// steps of shifted inverse iteration.
std::pair<double, Vector> dominant_right(const Matrix& Q, int max_iters) {
  const int T = static_cast<int>(Q.rows());
  const double shift = Q.maxCoeff();
  Vector x = Vector::Ones(T);
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector y = Q * x + shift * x;
    y /= y.sum();
    const double change = (y - x).cwiseAbs().maxCoeff();
    x = y;
    if (change <= 1e-13) break;
  }
  lambda = (Q * x).sum() / x.sum();

  for (int it = 0; it < 3; ++it) {
    const double mu = lambda * (1.0 + 1e-10) + 1e-300;
    Eigen::PartialPivLU<Matrix> lu(Q - mu * Matrix::Identity(T, T));
    Vector y = lu.solve(x);
    if (!y.allFinite() || y.sum() == 0.0) break;
    y /= y.sum();
    x = y;
    lambda = (Q * x).sum() / x.sum();
  }
  return {lambda, x};
}

}  // namespace

PerronResult perron(const Matrix& Q, int max_iters) {
  require(Q.rows() == Q.cols() && Q.rows() >= 1, "perron: matrix must be square");
  require(Q.allFinite(), "perron: non-finite entry");
  require(Q.minCoeff() >= 0.0, "perron: negative entry");
  require(is_irreducible(Q), "perron: matrix is reducible");
  const int T = static_cast<int>(Q.rows());
  PerronResult out;
  if (T == 1) {
    out.value = Q(0, 0);
    out.left = Vector::Ones(1);
    out.right = Vector::Ones(1);
    return out;
  }
  auto [lr, xi] = dominant_right(Q, max_iters);
  auto [ll, zeta] = dominant_right(Q.transpose(), max_iters);
  if (xi.minCoeff() <= 0.0 || zeta.minCoeff() <= 0.0) {
    fail(ErrorCode::NumericalFailure, "perron: eigenvector is not positive");
  }
  xi *= T / xi.sum();
  zeta /= zeta.dot(xi);
  // Two-sided Rayleigh quotient.
  out.value = zeta.dot(Q * xi) / zeta.dot(xi);
  const double scale = std::max(1.0, out.value);
  const double res_r = (Q * xi - out.value * xi).cwiseAbs().maxCoeff();
  const double res_l =
      (Q.transpose() * zeta - out.value * zeta).cwiseAbs().maxCoeff();
  if (res_r > 1e-10 * scale * xi.cwiseAbs().maxCoeff() ||
      res_l > 1e-10 * scale * zeta.cwiseAbs().maxCoeff() ||
      std::abs(lr - ll) > 1e-9 * scale) {
    fail(ErrorCode::NumericalFailure, "perron: power iteration did not converge");
  }
  out.left = zeta;
  out.right = xi;
  return out;
}

double delta_of_b(const KernelBundle& bundle, double b) {
  require(b >= 0.0, "delta_of_b: b must be >= 0");
  if (b == 0.0) return perron(bundle.B()).value;
  return perron(bundle.tilted_sum(b)).value;
}

namespace {

void fill_vectors(SpectralData& s, const Matrix& A) {
  const PerronResult pr = perron(A);
  s.zeta = pr.left;
  s.xi = pr.right;
  s.nu = s.zeta.cwiseProduct(s.xi);
  s.tilted = A;
  const double target = s.F > 0.0 ? 1.0 : pr.value;
  s.residual = std::max((A * s.xi - target * s.xi).cwiseAbs().maxCoeff(),
                        (A.transpose() * s.zeta - target * s.zeta)
                            .cwiseAbs()
                            .maxCoeff());
}

}  // namespace

SpectralData free_energy(const KernelBundle& bundle) {
  SpectralData s;
  const double eps = bundle.tolerances().critical;
  s.delta = perron(bundle.B()).value;
  if (s.delta <= 1.0 + eps) {
    s.F = 0.0;
    s.critical = std::abs(s.delta - 1.0) <= eps;
    fill_vectors(s, bundle.B());
    s.mu = mean_mu(s, bundle);
    return s;
  }

  double lo = 0.0, d_lo = s.delta;
  double hi = 0.125, d_hi = delta_of_b(bundle, hi);
  for (int i = 0; d_hi >= 1.0; ++i) {
    if (i > 200) fail(ErrorCode::NumericalFailure, "free_energy: cannot bracket root");
    lo = hi;
    d_lo = d_hi;
    hi *= 2.0;
    d_hi = delta_of_b(bundle, hi);
  }
  // Secant steps safeguarded by bisection; Delta is strictly decreasing.
  double b = 0.5 * (lo + hi), d = 0.0;
  bool use_bisection = false;
  for (int it = 0; it < 500; ++it) {
    if (use_bisection) {
      b = 0.5 * (lo + hi);
    } else {
      b = lo + (d_lo - 1.0) * (hi - lo) / (d_lo - d_hi);
      if (!(b > lo && b < hi)) b = 0.5 * (lo + hi);
    }
    d = delta_of_b(bundle, b);
    if (std::abs(d - 1.0) <= 1e-12) break;
    const double width = hi - lo;
    if (d > 1.0) {
      lo = b;
      d_lo = d;
    } else {
      hi = b;
      d_hi = d;
    }
    // Alternate to bisection whenever a secant step fails to halve the
    // bracket.
    use_bisection = !use_bisection && (hi - lo) > 0.5 * width;
    if (hi - lo <= 1e-16 * hi) break;
  }
  if (std::abs(d - 1.0) > 1e-10) {
    fail(ErrorCode::NumericalFailure, "free_energy: root finding did not converge");
  }
  s.F = b;
  fill_vectors(s, bundle.tilted_sum(s.F));
  s.mu = mean_mu(s, bundle);
  return s;
}

double mean_mu(const SpectralData& s, const KernelBundle& bundle) {
  if (s.critical || s.F <= 0.0) return kInf;
  const int T = bundle.T();
  double mu = 0.0;
  for (int a = 0; a < T; ++a) {
    double acc = 0.0;
    for (std::int64_t x = 1; x <= bundle.x_max(); ++x) {
      const double xd = static_cast<double>(x);
      acc += xd * std::exp(-s.F * xd) * bundle.m(a, x) * s.xi(mod(a + x, T));
    }
    mu += s.zeta(a) * acc;
  }
  mu += s.zeta.dot(bundle.tail_first_moment(s.F) * s.xi);
  return mu;
}

Matrix SemiMarkovKernel::embedded_chain() const {
  Matrix Q = tail;
  for (int a = 0; a < T; ++a)
    for (std::int64_t x = 1; x <= x_max; ++x) Q(a, mod(a + x, T)) += g[a][x];
  return Q;
}

SemiMarkovKernel gamma_kernel(const SpectralData& s, const KernelBundle& bundle) {
  if (s.delta < 1.0 - bundle.tolerances().critical) {
    fail(ErrorCode::InvalidState,
         "Gamma is not stochastic when delta < 1; use M directly");
  }
  const int T = bundle.T();
  SemiMarkovKernel k;
  k.T = T;
  k.x_max = bundle.x_max();
  k.F = s.F;
  k.g.assign(T, std::vector<double>(static_cast<std::size_t>(k.x_max) + 1, 0.0));
  k.deficit.assign(T, 1.0);
  for (int a = 0; a < T; ++a) {
    for (std::int64_t x = 1; x <= k.x_max; ++x) {
      const int b = static_cast<int>(mod(a + x, T));
      k.g[a][x] = bundle.m(a, x) * std::exp(-s.F * static_cast<double>(x)) *
                  s.xi(b) / s.xi(a);
      k.deficit[a] -= k.g[a][x];
    }
  }
  k.tail = bundle.tail(s.F);
  for (int a = 0; a < T; ++a)
    for (int b = 0; b < T; ++b) k.tail(a, b) *= s.xi(b) / s.xi(a);
  return k;
}

}  // namespace copoly
