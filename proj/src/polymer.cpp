#include "copoly/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "copoly/error.hpp"

namespace copoly {

// ---------------------------------------------------------------------------
// Excursion shapes
//
// An excursion of length l is +1, then m = l - 2 lazy steps from height 1
// back to 1 staying >= 1, then -1. Such a middle part is a choice of f flat
// steps among m slots plus a Dyck path on the remaining k = m - f slots,
// with probability weight r^f p^k. The meander is the same with m = l - 1
// and a nonnegative path of free endpoint in place of the Dyck path.

namespace {

double log_catalan(std::int64_t n) {
  return log_choose(2 * n, n) - std::log(static_cast<double>(n) + 1.0);
}

// log of the number of +-1 paths from height h with u ups and d downs that
// never go below 0.
double log_paths_above(std::int64_t h, std::int64_t u, std::int64_t d) {
  if (h < 0 || u < 0 || d < 0) return kNegInf;
  if (h + u - d < 0) return kNegInf;
  const double all = log_choose(u + d, d);
  if (d <= h) return all;
  const double bad = log_choose(u + d, d - h - 1);
  return all + std::log1p(-std::exp(bad - all));
}

}  // namespace

ExcursionSampler::ExcursionSampler(double p) : p_(p), r_(1.0 - 2.0 * p) {}

std::int64_t ExcursionSampler::excursion_flats(std::int64_t m, Rng& rng) {
  auto it = flat_cdf_.find(m);
  if (it == flat_cdf_.end()) {
    // Entry i is for k = 2i nonflat steps, f = m - 2i.
    std::vector<double> logw;
    const double lr = std::log(r_), lp = std::log(p_);
    for (std::int64_t k = 0; k <= m; k += 2) {
      const std::int64_t f = m - k;
      logw.push_back(log_choose(m, f) + static_cast<double>(f) * lr +
                     static_cast<double>(k) * lp + log_catalan(k / 2));
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    std::vector<double> cdf(logw.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < logw.size(); ++i) {
      acc += std::exp(logw[i] - top);
      cdf[i] = acc;
    }
    for (double& c : cdf) c /= acc;
    it = flat_cdf_.emplace(m, std::move(cdf)).first;
  }
  const auto& cdf = it->second;
  const double u = rng.uniform();
  auto pos = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (pos == cdf.end()) --pos;
  const std::int64_t k = 2 * (pos - cdf.begin());
  return m - k;
}

std::int64_t ExcursionSampler::meander_flats(std::int64_t m, Rng& rng) {
  if (m == 0) return 0;
  // Proposal f ~ Binomial(m, r) has weight C(m,f) r^f (2p)^k; accept with
  // C(k, floor(k/2)) / 2^k <= 1.
  std::binomial_distribution<std::int64_t> prop(m, r_);
  for (int attempt = 0; attempt < 100'000'000; ++attempt) {
    const std::int64_t f = prop(rng.engine());
    const std::int64_t k = m - f;
    const double acc = std::exp(log_choose(k, k / 2) -
                                static_cast<double>(k) * std::numbers::ln2);
    if (rng.uniform() < acc) return f;
  }
  fail(ErrorCode::NumericalFailure, "meander flat-count sampler stalled");
}

std::int64_t ExcursionSampler::meander_lift(std::int64_t k, Rng& rng) {
  // P(end <= k - 2d) = 1 - C(k, d-1) / C(k, floor(k/2)); pick the largest d
  // with C(k, d-1) / C(k, floor(k/2)) <= v.
  const double v = 1.0 - rng.uniform();  // (0, 1]
  const double top = log_choose(k, k / 2);
  const double lv = std::log(v);
  std::int64_t lo = 0, hi = k / 2;  // lo always qualifies
  while (lo < hi) {
    const std::int64_t mid = (lo + hi + 1) / 2;
    if (log_choose(k, mid - 1) - top <= lv) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return k - 2 * lo;
}

void ExcursionSampler::nonnegative_path(std::int64_t k, std::int64_t j,
                                        Rng& rng, std::vector<int>& steps) {
  steps.clear();
  std::int64_t u = (k + j) / 2, d = (k - j) / 2, h = 0;
  for (std::int64_t i = 0; i < k; ++i) {
    int s;
    if (u == 0) {
      s = -1;
    } else if (d == 0) {
      s = +1;
    } else {
      const double pu = std::exp(log_paths_above(h + 1, u - 1, d) -
                                 log_paths_above(h, u, d));
      s = rng.uniform() < pu ? +1 : -1;
    }
    if (s > 0) {
      --u;
      ++h;
    } else {
      --d;
      --h;
    }
    steps.push_back(s);
  }
}

void ExcursionSampler::assemble(std::int64_t m, std::int64_t f,
                                const std::vector<int>& steps, Rng& rng,
                                std::vector<std::int64_t>& out) {
  // Partial Fisher-Yates: the first f entries of slots_ are the flat slots.
  slots_.resize(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) slots_[i] = i;
  std::vector<char> flat(static_cast<std::size_t>(m), 0);
  for (std::int64_t i = 0; i < f; ++i) {
    const std::int64_t j = i + static_cast<std::int64_t>(rng.below(m - i));
    std::swap(slots_[i], slots_[j]);
    flat[slots_[i]] = 1;
  }
  std::int64_t h = 1;
  std::size_t next = 0;
  for (std::int64_t i = 0; i < m; ++i) {
    if (!flat[i]) h += steps[next++];
    out.push_back(h);
  }
}

void ExcursionSampler::excursion(std::int64_t l, Rng& rng,
                                 std::vector<std::int64_t>& out) {
  require(l >= 2, "excursion length must be >= 2");
  const std::int64_t m = l - 2;
  const std::int64_t f = excursion_flats(m, rng);
  nonnegative_path(m - f, 0, rng, steps_);
  out.push_back(0);
  out.push_back(1);
  assemble(m, f, steps_, rng, out);
  out.push_back(0);
}

void ExcursionSampler::meander(std::int64_t l, Rng& rng,
                               std::vector<std::int64_t>& out) {
  require(l >= 1, "meander length must be >= 1");
  const std::int64_t m = l - 1;
  const std::int64_t f = meander_flats(m, rng);
  const std::int64_t j = meander_lift(m - f, rng);
  nonnegative_path(m - f, j, rng, steps_);
  out.push_back(0);
  out.push_back(1);
  assemble(m, f, steps_, rng, out);
}

std::int64_t ExcursionSampler::meander_endpoint(std::int64_t l, Rng& rng) {
  require(l >= 1, "meander length must be >= 1");
  const std::int64_t m = l - 1;
  const std::int64_t f = meander_flats(m, rng);
  return 1 + meander_lift(m - f, rng);
}

// ---------------------------------------------------------------------------
// Polymer sampler

PolymerSampler::PolymerSampler(const KernelBundle& bundle,
                               const PartitionTable& table, Endpoint endpoint,
                               std::int64_t N)
    : bundle_(bundle), table_(table), endpoint_(endpoint), N_(N),
      shapes_(bundle.p()) {
  require(N >= 1 && N <= table.N(), "sampler horizon must lie in [1, table N]");
  require(table.T() == bundle.T(), "table and bundle periods differ");
  const int T = bundle.T();
  log_m_.assign(T, std::vector<double>(static_cast<std::size_t>(N) + 1, kNegInf));
  log_g_.assign(T, std::vector<double>(static_cast<std::size_t>(N) + 1, 0.0));
  for (int a = 0; a < T; ++a) {
    for (std::int64_t x = 1; x <= N; ++x) {
      log_m_[a][x] = bundle.log_m(a, x);
      log_g_[a][x] = bundle.log_free_tail_weight(a, x);
    }
  }
}

double PolymerSampler::rho_plus(std::int64_t t, std::int64_t l) const {
  const int T = bundle_.T();
  const int a = static_cast<int>(mod(t, T));
  const int b = static_cast<int>(mod(t + l, T));
  const double z = -static_cast<double>(l) * bundle_.h() + bundle_.sigma().sigma(a, b);
  return 1.0 / (1.0 + std::exp(z));
}

PolymerSample PolymerSampler::sample(Rng& rng, bool full_path) {
  PolymerSample s = draw(rng, full_path);
  if (bundle_.charges().swapped) {
    for (int& v : s.signs) v = -v;
    for (auto& v : s.heights) v = -v;
    s.end_height = -s.end_height;
  }
  return s;
}

PolymerSample PolymerSampler::draw(Rng& rng, bool full_path) {
  const int T = bundle_.T();
  const bool free = endpoint_ == Endpoint::Free;
  PolymerSample s;
  s.N = N_;
  s.endpoint = endpoint_;
  if (full_path) {
    s.heights.reserve(static_cast<std::size_t>(N_) + 1);
    s.heights.push_back(0);
  }
  std::vector<std::int64_t> piece;

  std::int64_t t = 0;
  while (t < N_) {
    const int k = static_cast<int>(t % T);
    const std::int64_t rem = N_ - t;
    const double lz = table_.log_partition(endpoint_, k, rem);
    double u = rng.uniform();
    if (free) {
      const double stop = std::exp(log_g_[k][rem] - lz);
      if (u < stop) {
        const int sign = rng.uniform() < rho_plus(t, rem) ? +1 : -1;
        s.signs.push_back(sign);
        if (full_path) {
          piece.clear();
          shapes_.meander(rem, rng, piece);
          for (std::size_t i = 1; i < piece.size(); ++i) {
            s.heights.push_back(sign * piece[i]);
          }
          s.end_height = s.heights.back();
        } else {
          s.end_height = sign * shapes_.meander_endpoint(rem, rng);
        }
        return s;
      }
      u -= stop;
    }
    std::int64_t next = N_;
    for (std::int64_t tp = t + 1; tp <= N_; ++tp) {
      const double w =
          std::exp(log_m_[k][tp - t] +
                   table_.log_partition(endpoint_, tp % T, N_ - tp) - lz);
      u -= w;
      if (u < 0.0) {
        next = tp;
        break;
      }
    }
    const std::int64_t l = next - t;
    int sign = 0;
    if (l > 1) sign = rng.uniform() < rho_plus(t, l) ? +1 : -1;
    s.signs.push_back(sign);
    s.zeros.tau.push_back(next);
    if (full_path) {
      if (l == 1) {
        s.heights.push_back(0);
      } else {
        piece.clear();
        shapes_.excursion(l, rng, piece);
        for (std::size_t i = 1; i < piece.size(); ++i) {
          s.heights.push_back(sign * piece[i]);
        }
      }
    }
    t = next;
  }
  s.end_height = 0;
  return s;
}

PolymerSample sample_path(const KernelBundle& bundle,
                          const PartitionTable& table, Endpoint endpoint,
                          std::int64_t N, std::uint64_t seed,
                          std::uint64_t stream, bool full_path) {
  PolymerSampler sampler(bundle, table, endpoint, N);
  Rng rng(seed, stream);
  return sampler.sample(rng, full_path);
}

// ---------------------------------------------------------------------------
// Sign constants

double SignConstants::p_f_of_t(double t, int eta) const {
  require(p_crit.has_value() && eta >= 0 &&
              eta < static_cast<int>(q_crit.size()),
          "p_f(t) needs the critical sign constants");
  require(t >= 0.0 && t <= 1.0, "t must lie in [0, 1]");
  const double w = 2.0 * std::asin(std::sqrt(t)) / std::numbers::pi;
  return (1.0 - w) * *p_crit + w * q_crit[eta];
}

SignConstants sign_constants(const SpectralData& s, const KernelBundle& bundle,
                             const RegimeReport& report) {
  const int T = bundle.T();
  const double cK = bundle.cK();
  const ChargeSet& c = bundle.charges();
  Vector half_pin(T);  // c_K e^{omega_zero_b} / 2
  for (int b = 0; b < T; ++b) half_pin(b) = 0.5 * cK * std::exp(c.zero_at_epoch(b));

  SignConstants out;
  switch (report.regime) {
    case Regime::Localized:
      fail(ErrorCode::InvalidState, "sign constants are not defined when localized");
    case Regime::Delocalized: {
      const Matrix R = resolvent(bundle, s);
      const Matrix RLR = R * bundle.L() * R;
      const Matrix RLt = R * bundle.Ltilde();
      out.p_c.resize(T);
      out.p_f.resize(T);
      const double row0 = R.row(0).sum();
      for (int eta = 0; eta < T; ++eta) {
        // sum_{a,b} R_{0a} (c_K/2) e^{omega_zero_b} R_{b eta}
        const double num = row0 * half_pin.dot(R.col(eta));
        out.p_c[eta] = num / RLR(0, eta);
        out.p_f[eta] = row0 * cK / RLt(0, eta);
      }
      break;
    }
    case Regime::Critical: {
      const Vector& z = s.zeta;
      const Vector& xi = s.xi;
      const double zLxi = z.dot(bundle.L() * xi);
      out.p_crit = z.sum() * half_pin.dot(xi) / zLxi;
      out.q_crit.resize(T);
      for (int eta = 0; eta < T; ++eta) {
        out.q_crit[eta] = cK * z.sum() / z.dot(bundle.Ltilde().col(eta));
      }
      break;
    }
  }
  if (c.swapped) {
    // Report P(S > 0) for the sides as given.
    for (auto* v : {&out.p_c, &out.p_f, &out.q_crit})
      for (double& x : *v) x = 1.0 - x;
    if (out.p_crit) out.p_crit = 1.0 - *out.p_crit;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

SampleSummary summarize(const PolymerSample& s, const std::vector<double>& t_grid) {
  SampleSummary out;
  const auto& tau = s.zeros.tau;
  const std::int64_t N = s.N;
  out.G_N = tau.empty() ? 0 : tau.back();
  auto last_before = [&](std::int64_t n) -> std::int64_t {
    auto it = std::upper_bound(tau.begin(), tau.end(), n);
    return it == tau.begin() ? 0 : *(it - 1);
  };
  out.G_half = last_before(N / 2);
  {
    std::int64_t prev = 0;
    for (auto t : tau) {
      out.max_gap = std::max(out.max_gap, t - prev);
      prev = t;
    }
    out.max_gap = std::max(out.max_gap, N - prev);
  }
  {
    const std::int64_t from = (N + 1) / 2;  // smallest n with 2n >= N
    if (from == 0) {
      out.D_half = 0;
    } else {
      auto it = std::lower_bound(tau.begin(), tau.end(), from);
      out.D_half = it == tau.end() ? N + 1 : *it;
    }
  }
  out.end_abs = std::abs(s.end_height);
  out.end_sign = s.end_height > 0 ? 1 : (s.end_height < 0 ? -1 : 0);
  if (!s.heights.empty()) {
    out.max_abs = 0;
    for (auto h : s.heights) out.max_abs = std::max(out.max_abs, std::abs(h));
  }
  out.side.reserve(t_grid.size());
  for (double t : t_grid) {
    const auto n = static_cast<std::int64_t>(std::floor(t * static_cast<double>(N)));
    signed char side = 0;
    if (n > 0 && !std::binary_search(tau.begin(), tau.end(), n)) {
      const auto idx = std::upper_bound(tau.begin(), tau.end(), n) - tau.begin();
      if (idx < static_cast<std::ptrdiff_t>(s.signs.size())) {
        side = static_cast<signed char>(s.signs[idx]);
      }
    }
    out.side.push_back(side);
  }
  return out;
}

namespace {

// Kolmogorov-Smirnov distance of a sample to a continuous CDF; ties are
// handled by comparing at both ends of each jump.
template <typename Cdf>
double ks_distance(std::vector<double> v, Cdf cdf) {
  if (v.empty()) return -1.0;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double F = cdf(v[i]);
    d = std::max({d, std::abs(static_cast<double>(i) / n - F),
                  std::abs(static_cast<double>(j) / n - F)});
    i = j;
  }
  return d;
}

}  // namespace

StatReport scaling_statistics(const std::vector<SampleSummary>& samples,
                              Endpoint endpoint, Regime regime, std::int64_t N,
                              const StatOptions& options) {
  require(samples.size() >= 10000, "scaling statistics need at least 10^4 samples");
  StatReport rep;
  rep.regime = regime;
  rep.endpoint = endpoint;
  rep.N = N;
  rep.samples = static_cast<std::int64_t>(samples.size());
  rep.options = options;
  const double n = static_cast<double>(samples.size());
  const double logN = std::log(static_cast<double>(N));

  // Sign frequencies, all regimes.
  const double nan = std::nan("");
  const SignConstants* sc = options.signs ? &*options.signs : nullptr;
  auto freq = [](double hits, double total, double& f, double& se) {
    f = total > 0.0 ? hits / total : std::nan("");
    se = total > 0.0 ? std::sqrt(f * (1.0 - f) / total) : std::nan("");
  };
  for (std::size_t i = 0; i < options.t_grid.size(); ++i) {
    double pos = 0.0, nonzero = 0.0, f, se;
    for (const auto& s : samples) {
      pos += s.side[i] > 0;
      nonzero += s.side[i] != 0;
    }
    freq(pos, n, f, se);
    rep.positive_freq.push_back(f);
    rep.positive_stderr.push_back(se);
    freq(pos, nonzero, f, se);
    rep.positive_freq_nonzero.push_back(f);
    rep.positive_stderr_nonzero.push_back(se);
    double ref = nan;
    const double t = options.t_grid[i];
    if (sc && t > 0.0 && t < 1.0) {
      if (regime == Regime::Critical && sc->p_crit) {
        ref = endpoint == Endpoint::Constrained ? *sc->p_crit
                                                : sc->p_f_of_t(t, options.eta);
      } else if (regime == Regime::Delocalized && endpoint == Endpoint::Constrained &&
                 !sc->p_c.empty()) {
        ref = sc->p_c[options.eta];
      }
    }
    rep.positive_reference.push_back(ref);
  }
  {
    double pos = 0.0, nonzero = 0.0;
    for (const auto& s : samples) {
      pos += s.end_sign > 0;
      nonzero += s.end_sign != 0;
    }
    freq(pos, n, rep.end_positive_freq, rep.end_positive_stderr);
    freq(pos, nonzero, rep.end_positive_freq_nonzero, rep.end_positive_stderr_nonzero);
    rep.end_positive_reference = nan;
    if (sc && endpoint == Endpoint::Free) {
      if (regime == Regime::Critical && !sc->q_crit.empty()) {
        rep.end_positive_reference = sc->q_crit[options.eta];
      } else if (regime == Regime::Delocalized && !sc->p_f.empty()) {
        rep.end_positive_reference = sc->p_f[options.eta];
      }
    }
  }

  switch (regime) {
    case Regime::Localized: {
      require(options.F > 0.0, "localized statistics need F > 0");
      for (double C : options.C_grid) {
        const double level = C * logN / options.F;
        double hits = 0.0, gaps = 0.0;
        for (const auto& s : samples) {
          require(s.max_abs >= 0, "localized statistics need full paths");
          if (static_cast<double>(s.max_abs) > level) hits += 1.0;
          if (static_cast<double>(s.max_gap) > level) gaps += 1.0;
        }
        rep.max_exceedance.push_back(hits / n);
        rep.max_gap_exceedance.push_back(gaps / n);
      }
      break;
    }
    case Regime::Delocalized: {
      for (std::int64_t L : options.L_grid) {
        double a = 0.0, b = 0.0, c = 0.0;
        for (const auto& s : samples) {
          if (s.G_N >= L) a += 1.0;
          if (s.G_half >= L) b += 1.0;
          if (s.D_half <= N - L) c += 1.0;
        }
        rep.p_G_N.push_back(a / n);
        rep.p_G_half.push_back(b / n);
        rep.p_D_half.push_back(c / n);
      }
      if (!options.L_grid.empty()) {
        rep.envelope_constant = 2.0 * rep.p_G_half[0] *
                                std::sqrt(static_cast<double>(options.L_grid[0]));
        rep.envelope_holds = true;
        for (std::size_t i = 0; i < options.L_grid.size(); ++i) {
          const double scaled =
              rep.p_G_half[i] * std::sqrt(static_cast<double>(options.L_grid[i]));
          if (scaled > rep.envelope_constant) rep.envelope_holds = false;
        }
      }
      break;
    }
    case Regime::Critical: {
      if (endpoint == Endpoint::Free) {
        const double Nd = static_cast<double>(N);
        std::vector<double> g, e, m;
        for (const auto& s : samples) {
          g.push_back(static_cast<double>(s.G_N) / Nd);
          e.push_back(static_cast<double>(s.end_abs) / (options.sigma * std::sqrt(Nd)));
          if (s.G_N < N) {
            m.push_back(static_cast<double>(s.end_abs) /
                        (options.sigma * std::sqrt(static_cast<double>(N - s.G_N))));
          }
        }
        rep.ks_last_zero_arcsine = ks_distance(g, [](double x) {
          return 2.0 / std::numbers::pi * std::asin(std::sqrt(std::clamp(x, 0.0, 1.0)));
        });
        rep.ks_endpoint_half_normal = ks_distance(e, [](double x) {
          return std::erf(x / std::numbers::sqrt2);
        });
        rep.ks_endpoint_meander = ks_distance(m, [](double x) {
          return 1.0 - std::exp(-0.5 * x * x);
        });
      }
      break;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Gap bound

double gap_bound_khat(const KernelBundle& bundle, const PartitionTable& table,
                      std::int64_t k, std::int64_t n) {
  const ChargeSet& c = bundle.charges();
  double s = 0.0;
  for (std::int64_t i = 1; i <= n; ++i) {
    s += c.minus_at_epoch(k + i) - c.plus_at_epoch(k + i);
  }
  return 0.5 * (1.0 + std::exp(s)) / std::exp(table.log_constrained(k, n));
}

GapBoundResult gap_bound_check(const KernelBundle& bundle,
                               const PartitionTable& table, std::int64_t N) {
  require(N >= 1 && N <= table.N(), "gap_bound_check: N outside the table");
  const int T = bundle.T();
  GapBoundResult out;
  for (std::int64_t NN = 1; NN <= N; ++NN) {
    for (Endpoint a : {Endpoint::Constrained, Endpoint::Free}) {
      const double lz = table.log_partition(a, 0, NN);
      for (std::int64_t k = 0; k < NN; ++k) {
        for (std::int64_t n = 1; k + n <= NN; ++n) {
          const double lp = table.log_constrained(0, k) +
                            bundle.log_m(static_cast<int>(k % T), n) +
                            table.log_partition(a, k + n, NN - k - n) - lz;
          const double ratio = std::exp(lp) / gap_bound_khat(bundle, table, k, n);
          out.worst_ratio = std::max(out.worst_ratio, ratio);
          if (ratio > 1.0 + 1e-12) out.holds = false;
          ++out.checked;
        }
      }
    }
  }
  return out;
}

}  // namespace copoly
