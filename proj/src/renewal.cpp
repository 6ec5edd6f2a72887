#include "copoly/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "copoly/error.hpp"

namespace copoly {

RenewalSampler::RenewalSampler(const SemiMarkovKernel& gamma,
                               const KernelBundle& bundle)
    : gamma_(gamma), bundle_(bundle) {
  const int T = gamma.T;
  cdf_.resize(T);
  table_mass_.assign(T, 0.0);
  tail_mass_.assign(T, 0.0);
  for (int a = 0; a < T; ++a) {
    auto& c = cdf_[a];
    c.assign(static_cast<std::size_t>(gamma.x_max) + 1, 0.0);
    double acc = 0.0;
    for (std::int64_t x = 1; x <= gamma.x_max; ++x) {
      acc += gamma.g[a][x];
      c[x] = acc;
    }
    table_mass_[a] = acc;
    tail_mass_[a] = gamma.tail.row(a).sum();
  }
}

std::int64_t RenewalSampler::tail_step(int from, int to, Rng& rng) const {
  const int T = gamma_.T;
  const std::int64_t x0 =
      first_in_class_after(gamma_.x_max, mod(to - from, T), T);
  const double F = gamma_.F;
  const double h = bundle_.h();
  const double es = std::exp(bundle_.sigma().sigma(from, to));
  const double x0d = static_cast<double>(x0);
  const double td = static_cast<double>(T);
  // Target on x0 + kT is proportional to x^{-3/2} e^{-Fx} (1 + e^{S - hx}).
  // Proposal: floor of a Pareto(1/2) variable on the lattice, with
  // pi(k) = sqrt(x0/x) - sqrt(x0/(x+T)) >= (T/2) sqrt(x0) (x+T)^{-3/2}.
  auto weight = [&](double x) {
    return std::pow(x, -1.5) * std::exp(-F * x) * (1.0 + es * std::exp(-h * x));
  };
  const double bound = 2.0 / (td * std::sqrt(x0d)) *
                       std::pow(1.0 + td / x0d, 1.5) * std::exp(-F * x0d) *
                       (1.0 + es * std::exp(-h * x0d));
  for (int attempt = 0; attempt < 10'000'000; ++attempt) {
    const double u = 1.0 - rng.uniform();  // (0, 1]
    const double y = x0d / (u * u);
    if (!(y < 9.0e15)) continue;
    const auto k = static_cast<std::int64_t>((y - x0d) / td);
    const double x = x0d + static_cast<double>(k) * td;
    const double pi = std::sqrt(x0d / x) - std::sqrt(x0d / (x + td));
    if (rng.uniform() * bound * pi < weight(x)) return x0 + k * T;
  }
  fail(ErrorCode::NumericalFailure, "tail step rejection sampler stalled");
}

RenewalSampler::Step RenewalSampler::step(int from, Rng& rng) const {
  const int T = gamma_.T;
  const double total = table_mass_[from] + tail_mass_[from];
  double u = rng.uniform() * total;
  if (u < table_mass_[from]) {
    const auto& c = cdf_[from];
    auto it = std::upper_bound(c.begin() + 1, c.end(), u);
    if (it == c.end()) --it;
    const std::int64_t x = it - c.begin();
    return {x, static_cast<int>(mod(from + x, T))};
  }
  u -= table_mass_[from];
  int to = T - 1;
  for (int b = 0; b < T; ++b) {
    if (u < gamma_.tail(from, b)) {
      to = b;
      break;
    }
    u -= gamma_.tail(from, b);
  }
  return {tail_step(from, to, rng), to};
}

RenewalTrajectory RenewalSampler::trajectory(int start, std::int64_t horizon,
                                             Rng& rng) const {
  RenewalTrajectory tr;
  tr.J.push_back(start);
  tr.tau.push_back(0);
  std::int64_t t = 0;
  int j = start;
  while (true) {
    const Step s = step(j, rng);
    t += s.x;
    j = s.to;
    if (t > horizon) break;
    tr.J.push_back(j);
    tr.tau.push_back(t);
  }
  return tr;
}

RenewalTrajectory sample_trajectory(const SemiMarkovKernel& gamma,
                                    const KernelBundle& bundle, int start,
                                    std::int64_t horizon, std::uint64_t seed,
                                    std::uint64_t stream) {
  require(start >= 0 && start < gamma.T, "start residue out of range");
  require(horizon >= 0 && horizon <= gamma.x_max, "horizon exceeds X_max");
  const RenewalSampler sampler(gamma, bundle);
  Rng rng(seed, stream);
  return sampler.trajectory(start, horizon, rng);
}

GreenTable green_function(const SemiMarkovKernel& gamma, std::int64_t N) {
  require(N >= 0 && N <= gamma.x_max, "green_function: N exceeds X_max");
  const int T = gamma.T;
  GreenTable g;
  g.T = T;
  g.N = N;
  g.U.assign(T, std::vector<double>(static_cast<std::size_t>(N) + 1, 0.0));
  g.Qsurv.assign(T, std::vector<double>(static_cast<std::size_t>(N) + 1, 0.0));
  for (int a = 0; a < T; ++a) {
    auto& U = g.U[a];
    U[0] = 1.0;
    for (std::int64_t n = 1; n <= N; ++n) {
      double acc = 0.0;
      for (std::int64_t y = 0; y < n; ++y) {
        acc += U[y] * gamma.g[(a + y) % T][n - y];
      }
      U[n] = acc;
    }
    // Suffix sums of the row, tail included.
    double suffix = gamma.tail.row(a).sum();
    for (std::int64_t s = gamma.x_max; s > N; --s) suffix += gamma.g[a][s];
    for (std::int64_t t = N; t >= 0; --t) {
      g.Qsurv[a][t] = suffix;
      suffix += gamma.g[a][t];
    }
  }
  return g;
}

std::vector<double> q_beta(const SemiMarkovKernel& gamma, int beta,
                           std::int64_t N) {
  require(N >= 0 && N <= gamma.x_max, "q_beta: N exceeds X_max");
  require(beta >= 0 && beta < gamma.T, "q_beta: beta out of range");
  const int T = gamma.T;
  // v(y): mass at epoch y in state beta+[y] without having visited beta
  // in between (v(0) = 1 at the start).
  std::vector<double> v(static_cast<std::size_t>(N) + 1, 0.0);
  std::vector<double> q(static_cast<std::size_t>(N) + 1, 0.0);
  v[0] = 1.0;
  for (std::int64_t y = 1; y <= N; ++y) {
    double acc = 0.0;
    for (std::int64_t z = 0; z < y; ++z) {
      if (v[z] != 0.0) acc += v[z] * gamma.g[(beta + z) % T][y - z];
    }
    if (mod(y, T) == 0) {
      q[y] = acc;
    } else {
      v[y] = acc;
    }
  }
  return q;
}

CBeta c_beta(const SpectralData& s, const KernelBundle& bundle, int beta) {
  require(beta >= 0 && beta < bundle.T(), "c_beta: beta out of range");
  if (s.delta < 1.0 - bundle.tolerances().critical) {
    fail(ErrorCode::InvalidState, "c_beta needs delta >= 1");
  }
  const int T = bundle.T();
  const Vector& z = s.zeta;
  const Vector& xi = s.xi;
  const Matrix& L = bundle.L();
  CBeta out;
  out.value = z.dot(L * xi) / (z(beta) * xi(beta));

  Matrix Lhat(T, T), Bhat(T, T);
  for (int a = 0; a < T; ++a)
    for (int g = 0; g < T; ++g) {
      Lhat(a, g) = L(a, g) * xi(g) / xi(a);
      Bhat(a, g) = s.tilted(a, g) * xi(g) / xi(a);
    }
  const Vector nu = z.cwiseProduct(xi);
  out.via_lhat = nu.dot(Lhat * Vector::Ones(T)) / nu(beta);

  Matrix Bb = Bhat;
  Bb.col(beta).setZero();
  const Matrix R =
      Eigen::PartialPivLU<Matrix>(Matrix::Identity(T, T) - Bb)
          .solve(Matrix::Identity(T, T));
  out.via_matrix = (R * Lhat * R * Bhat)(beta, beta);
  return out;
}

std::vector<DoneyRow> doney_check(const GreenTable& green, const SpectralData& s,
                                  double c_b, int a, int b,
                                  const std::vector<std::int64_t>& xs) {
  if (!s.critical) {
    fail(ErrorCode::InvalidState, "Doney check applies to the critical regime only");
  }
  const int T = green.T;
  std::vector<DoneyRow> out;
  for (std::int64_t x : xs) {
    require(x >= 1 && x <= green.N, "doney_check: x outside the table");
    require(mod(x, T) == mod(b - a, T), "doney_check: x not in class b - a");
    const double u = green.at(a, x);
    out.push_back({x, std::sqrt(static_cast<double>(x)) * u * 2.0 *
                          std::numbers::pi * c_b / (T * T)});
  }
  return out;
}

double visit_identity_residual(const Matrix& Qin) {
  const int T = static_cast<int>(Qin.rows());
  Matrix Q = Qin;
  for (int a = 0; a < T; ++a) Q.row(a) /= Q.row(a).sum();
  const PerronResult pr = perron(Q);
  const Vector nu = pr.left / pr.left.sum();
  double worst = 0.0;
  for (int g = 0; g < T; ++g) {
    Matrix Qg = Q;
    Qg.col(g).setZero();
    const Matrix R = Eigen::PartialPivLU<Matrix>(Matrix::Identity(T, T) - Qg)
                         .solve(Matrix::Identity(T, T));
    const Matrix RQ = R * Q;
    for (int a = 0; a < T; ++a) {
      worst = std::max(worst, std::abs(R(g, a) - nu(a) / nu(g)));
      worst = std::max(worst, std::abs(RQ(a, g) - 1.0));
    }
  }
  return worst;
}

}  // namespace copoly
