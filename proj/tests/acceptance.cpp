// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// if any criterion fails. Seeds are fixed, so the statistical checks are
// deterministic.
#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "copoly/polymer.hpp"
#include "copoly/renewal.hpp"
#include "oracles.hpp"

using namespace copoly;

namespace {

int failures = 0;

void report(int k, bool ok, const std::string& detail, double seconds) {
  std::printf("criterion %2d %s  (%.1fs)  %s\n", k, ok ? "PASS" : "FAIL", seconds,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void run(int k, const std::function<bool(std::string&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(k, ok, detail, dt);
}

const ReturnLaw& law(double p) {
  static std::unordered_map<double, ReturnLaw> cache;
  auto it = cache.find(p);
  if (it == cache.end()) it = cache.emplace(p, return_law(WalkModel(p), 1 << 17)).first;
  return it->second;
}

ChargeSet pinning(std::vector<double> zero) {
  ChargeSet c = ChargeSet::zeros(static_cast<int>(zero.size()));
  c.omega_zero = std::move(zero);
  return c;
}

ChargeSet example_in_P() {
  ChargeSet c = ChargeSet::zeros(2);
  c.omega_minus = {-1.0, 1.0};
  c.omega_zero = {-1.0, -1.0};
  return c;
}

ChargeSet critical_in_P() {
  ChargeSet c = ChargeSet::zeros(2);
  c.omega_minus = {-1.0, 1.0};
  const KernelBundle b(c, law(0.3), 100000);
  const double shift = -std::log(perron(b.B()).value);
  c.omega_zero = {shift, shift};
  return c;
}

struct Model {
  KernelBundle bundle;
  SpectralData spectral;
  RegimeReport report;
  Model(const ChargeSet& c, double p = 0.3, std::int64_t x_max = 100000)
      : bundle(c, law(p), x_max), spectral(free_energy(bundle)),
        report(constants(spectral, bundle)) {}
  PartitionTable table(std::int64_t N) const {
    return PartitionTable(bundle, N,
                          report.regime == Regime::Localized ? report.F : 0.0);
  }
};

// Brute force: Z^c_n and Z^f_n for every n <= N in one depth-first pass over
// all 3^N step sequences, weights taken straight from the Hamiltonian.
void enumerate_all(const ChargeSet& c, double p, int N, std::vector<double>& Zc,
                   std::vector<double>& Zf) {
  Zc.assign(N + 1, 0.0);
  Zf.assign(N + 1, 0.0);
  const double prob[3] = {p, 1.0 - 2.0 * p, p};
  std::function<void(int, int, double, double)> dfs = [&](int n, int s, double w,
                                                          double H) {
    const double v = w * std::exp(H);
    Zf[n] += v;
    if (s == 0) Zc[n] += v;
    if (n == N) return;
    for (int d = -1; d <= 1; ++d) {
      const int t = s + d;
      const int bond = t != 0 ? (t > 0 ? 1 : -1) : (s > 0 ? 1 : (s < 0 ? -1 : 0));
      const std::int64_t e = n + 1;
      double dH = 0.0;
      if (bond > 0) dH += oracle::charge(c.omega_plus, e);
      if (bond < 0) dH += oracle::charge(c.omega_minus, e);
      if (bond == 0) dH += oracle::charge(c.omega_zero_tilde, e);
      if (t == 0) dH += oracle::charge(c.omega_zero, e);
      dfs(n + 1, t, w * prob[d + 1], H + dH);
    }
  };
  dfs(0, 0, 1.0, 0.0);
}

std::vector<std::int64_t> dyadic(int T, int eta, std::int64_t top) {
  std::vector<std::int64_t> out;
  for (std::int64_t N = 64; N < top; N *= 2) out.push_back(N + mod(eta - N, T));
  out.push_back(top + mod(eta - top, T));
  return out;
}

bool c1(std::string& d) {
  std::mt19937_64 g(20240601);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> Tdist(1, 6);
  const double ps[3] = {0.2, 0.3, 0.45};
  double worst_height = 0.0, worst_brute = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int T = Tdist(g);
    const double p = ps[i % 3];
    ChargeSet c = ChargeSet::zeros(T);
    double mean = 0.0;
    for (int k = 0; k < T; ++k) {
      c.omega_minus[k] = u(g);
      c.omega_zero[k] = u(g);
      c.omega_zero_tilde[k] = u(g);
      mean += c.omega_minus[k] / T;
    }
    if (mean > 0.0)  // canonical: h = -mean(omega_minus) >= 0
      for (double& v : c.omega_minus) v = -v;
    const KernelBundle b(c, law(p), 256);
    const PartitionTable t(b, 200, 0.0, DpMode::LogOnly);
    const WalkModel w(p);
    for (std::int64_t N = 1; N <= 200; ++N) {
      for (Endpoint a : {Endpoint::Constrained, Endpoint::Free}) {
        const double r = t.log_partition(a, 0, N);
        const double h = height_partition_oracle(c, w, N, a);
        worst_height = std::max(worst_height, std::abs(r - h) / std::max(1.0, std::abs(h)));
      }
    }
    std::vector<double> Zc, Zf;
    enumerate_all(c, p, 12, Zc, Zf);
    for (int N = 1; N <= 12; ++N) {
      const double bc = std::log(Zc[N]), bf = std::log(Zf[N]);
      worst_brute = std::max(worst_brute, std::abs(t.log_constrained(0, N) - bc) /
                                              std::max(1.0, std::abs(bc)));
      worst_brute = std::max(worst_brute, std::abs(t.log_free(0, N) - bf) /
                                              std::max(1.0, std::abs(bf)));
    }
  }
  d = fmt("20 sets; renewal vs height DP (N<=200) max rel err %.2e (tol 1e-9); "
          "vs enumeration (N<=12) %.2e (tol 1e-10)",
          worst_height, worst_brute);
  return worst_height <= 1e-9 && worst_brute <= 1e-10;
}

bool c2(std::string& d) {
  const Model m(pinning({0.4}));
  const PartitionTable t = m.table(2000);
  const double ratio =
      std::exp(t.log_constrained(0, 2000) - m.report.F * 2000) / m.report.Cgt[0];
  d = fmt("F=%.10f C_gt=%.10f ratio at N=2000 = %.8f (band [0.99,1.01])", m.report.F,
          m.report.Cgt[0], ratio);
  return m.report.regime == Regime::Localized && ratio >= 0.99 && ratio <= 1.01;
}

bool c3(std::string& d) {
  bool ok = true;
  std::string parts;
  for (int T : {1, 2}) {
    const Model m(ChargeSet::zeros(T));
    ok = ok && m.report.regime == Regime::Critical;
    const PartitionTable t = m.table(10001);
    for (int eta = 0; eta < T; ++eta) {
      const auto grid = dyadic(T, eta, 10000);
      const ConvergenceTable c =
          verify_asymptotics(m.report, t, eta, grid, Endpoint::Constrained);
      const double last = c.rows.back().ratio;
      const ConvergenceTable f = verify_asymptotics(m.report, t, eta, grid, Endpoint::Free);
      double free_dev = 0.0;
      for (const auto& r : f.rows) free_dev = std::max(free_dev, std::abs(r.ratio - 1.0));
      const double const_dev = std::abs(m.report.Ceq_f[eta] - 1.0);
      ok = ok && last >= 0.9 && last <= 1.1 && c.monotone && free_dev <= 1e-9 &&
           const_dev <= 1e-9;
      parts += fmt("T=%d eta=%d: ratio(N=%lld)=%.6f monotone=%d, C_eq_f-1=%.1e, "
                   "max|Zf/C-1|=%.1e; ",
                   T, eta, static_cast<long long>(grid.back()), last, int(c.monotone),
                   const_dev, free_dev);
    }
  }
  d = parts;
  return ok;
}

bool c4(std::string& d) {
  const Model m(pinning({-0.4}));
  const PartitionTable t = m.table(10000);
  const double rc = std::exp(t.log_constrained(0, 10000) + 1.5 * std::log(1e4)) / m.report.Clt[0];
  const double rf = std::exp(t.log_free(0, 10000) + 0.5 * std::log(1e4)) / m.report.Clt_f[0];
  d = fmt("N=10^4: N^1.5 Zc/C_lt = %.6f (band [0.97,1.03]); sqrt(N) Zf/C_lt_f = %.6f "
          "(band [0.95,1.05])",
          rc, rf);
  return m.report.regime == Regime::Delocalized && std::abs(rc - 1) <= 0.03 &&
         std::abs(rf - 1) <= 0.05;
}

bool c5(std::string& d) {
  bool ok = true;
  std::string parts;
  const std::pair<const char*, ChargeSet> cases[] = {{"zero T=2", ChargeSet::zeros(2)},
                                                     {"critical in P", critical_in_P()}};
  for (const auto& [name, c] : cases) {
    const Model m(c, 0.3, 32768);
    ok = ok && m.spectral.critical;
    const SemiMarkovKernel g = gamma_kernel(m.spectral, m.bundle);
    double id_res = visit_identity_residual(g.embedded_chain());
    double worst = 0.0;
    for (int beta = 0; beta < 2; ++beta) {
      const CBeta cb = c_beta(m.spectral, m.bundle, beta);
      id_res = std::max({id_res, std::abs(cb.via_matrix - cb.value),
                         std::abs(cb.via_lhat - cb.value)});
      const std::vector<double> q = q_beta(g, beta, 32768);
      auto a = [&](std::int64_t x) { return std::pow(double(x), 1.5) * q[x]; };
      const double est = 2 * a(32768) - a(8192);
      worst = std::max(worst, std::abs(est / cb.value - 1.0));
    }
    ok = ok && worst <= 0.03 && id_res <= 1e-10;
    parts += fmt("%s: max |x^1.5 q / c_beta - 1| = %.2e, identity residual %.1e; ", name,
                 worst, id_res);
  }
  d = parts;
  return ok;
}

bool c6(std::string& d) {
  bool ok = true;
  std::string parts;
  const std::pair<const char*, ChargeSet> cases[] = {
      {"zero T=1", ChargeSet::zeros(1)},
      {"zero T=2", ChargeSet::zeros(2)},
      {"critical in P", critical_in_P()}};
  for (const auto& [name, c] : cases) {
    const Model m(c, 0.3, 10000);
    const SemiMarkovKernel g = gamma_kernel(m.spectral, m.bundle);
    const GreenTable U = green_function(g, 10000);
    const int T = m.bundle.T();
    for (int a = 0; a < T; ++a)
      for (int b = 0; b < T; ++b) {
        const std::int64_t x = 10000 - T + 1 + mod(b - a - (10000 - T + 1), T);
        const double cb = c_beta(m.spectral, m.bundle, b).value;
        const double r = doney_check(U, m.spectral, cb, a, b, {x}).front().ratio;
        ok = ok && r >= 0.95 && r <= 1.05;
        parts += fmt("%s (%d,%d) x=%lld: %.5f; ", name, a, b, static_cast<long long>(x), r);
      }
  }
  d = parts + "band [0.95,1.05]";
  return ok;
}

bool c7(std::string& d) {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> Tdist(2, 6);
  int localized = 0, convex = 0, chain = 0, done = 0;
  double min_gap = kInf;
  while (done < 200) {
    const int T = Tdist(g);
    ChargeSet c = ChargeSet::zeros(T);
    double mean = 0.0;
    for (int i = 0; i < T; ++i) mean += (c.omega_minus[i] = u(g)) / T;
    for (int i = 0; i < T; ++i) c.omega_minus[i] -= mean;
    if (is_zero_sigma(compute_sigma(c))) continue;  // trivial, redraw
    const LocalizationCheck r = copolymer_localization_check(c, law(0.3), 100000);
    ++done;
    localized += r.localized;
    convex += r.kingman_convex;
    chain += r.chain_holds;
    min_gap = std::min(min_gap, (r.delta - 1.0) / std::max(1.0, r.delta));
  }
  d = fmt("%d/200 with delta > 1 (min scaled delta-1 = %.3e), convexity %d/200, "
          "bound chain %d/200",
          localized, min_gap, convex, chain);
  return localized == 200 && convex == 200 && min_gap > 1e-12;
}

double chi_square_pvalue(const ChargeSet& c, Endpoint a, std::uint64_t seed, int& dof) {
  const int N = 10;
  const double p = 0.3;
  auto key = [](const std::vector<int>& h) {
    std::int64_t k = 0;
    for (std::size_t i = 1; i < h.size(); ++i) k = 3 * k + (h[i] - h[i - 1] + 1);
    return k;
  };
  std::unordered_map<std::int64_t, double> exact;
  double Z = 0.0;
  oracle::for_each_path(N, p, [&](const std::vector<int>& h, double w) {
    if (a == Endpoint::Constrained && h.back() != 0) return;
    const double v = w * std::exp(oracle::hamiltonian(c, h));
    exact[key(h)] = v;
    Z += v;
  });
  const KernelBundle b(c, law(p), 64);
  const PartitionTable t(b, N);
  PolymerSampler sampler(b, t, a, N);
  Rng rng(seed, 0);
  const int draws = 1000000;
  std::unordered_map<std::int64_t, int> seen;
  std::vector<int> h(N + 1);
  for (int i = 0; i < draws; ++i) {
    const PolymerSample s = sampler.sample(rng, true);
    for (int n = 0; n <= N; ++n) h[n] = static_cast<int>(s.heights[n]);
    const std::int64_t k = key(h);
    if (!exact.count(k)) return 0.0;  // impossible path
    ++seen[k];
  }
  double stat = 0.0, pe = 0.0, po = 0.0;
  dof = 0;
  for (const auto& [k, w] : exact) {
    const double e = draws * w / Z;
    const double o = seen.count(k) ? seen[k] : 0;
    if (e < 5.0) {
      pe += e;
      po += o;
      continue;
    }
    stat += (o - e) * (o - e) / e;
    ++dof;
  }
  if (pe > 0.0) {
    stat += (po - pe) * (po - pe) / pe;
    ++dof;
  }
  --dof;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

bool c8(std::string& d) {
  ChargeSet mixed = ChargeSet::zeros(3);
  mixed.omega_plus = {0.1, -0.2, 0.0};
  mixed.omega_minus = {0.2, 0.1, -0.3};
  mixed.omega_zero = {0.3, -0.1, 0.2};
  mixed.omega_zero_tilde = {0.1, 0.0, -0.1};
  bool ok = true;
  std::uint64_t seed = 100;
  for (const auto& [name, c] : {std::pair<const char*, ChargeSet>{"zero", ChargeSet::zeros(1)},
                                {"mixed", mixed}}) {
    for (Endpoint a : {Endpoint::Constrained, Endpoint::Free}) {
      int dof = 0;
      const double pv = chi_square_pvalue(c, a, seed++, dof);
      ok = ok && pv > 0.01;
      d += fmt("%s/%s p=%.3f (dof %d); ", name, a == Endpoint::Free ? "f" : "c", pv, dof);
    }
  }
  d += "10^6 paths each, N=10, need p > 0.01";
  return ok;
}

bool c9(std::string& d) {
  bool ok = true;
  {
    const Model m(ChargeSet::zeros(2));
    const SignConstants s = sign_constants(m.spectral, m.bundle, m.report);
    const double e = std::max({std::abs(*s.p_crit - 0.5), std::abs(s.q_crit[0] - 0.5),
                               std::abs(s.q_crit[1] - 0.5)});
    ok = ok && e <= 1e-12;
    d += fmt("zero: |p_crit-1/2|,|q_crit-1/2| <= %.1e; ", e);
  }
  {
    ChargeSet c = ChargeSet::zeros(2);
    c.omega_minus = {-0.5, -0.1};
    c.omega_zero = {-0.3, 0.1};
    const Model m(c);
    const SignConstants s = sign_constants(m.spectral, m.bundle, m.report);
    double e = 0.0;
    for (int eta = 0; eta < 2; ++eta)
      e = std::max({e, std::abs(s.p_c[eta] - 1.0), std::abs(s.p_f[eta] - 1.0)});
    ok = ok && m.report.regime == Regime::Delocalized && m.bundle.h() > 0 && e <= 1e-12;
    d += fmt("h=%.2f delocalized: |p-1| <= %.1e; ", m.bundle.h(), e);
  }
  {
    const Model m(example_in_P());
    const SignConstants s = sign_constants(m.spectral, m.bundle, m.report);
    const double spread = std::abs(s.p_c[1] - s.p_c[0]);
    ok = ok && m.report.in_P && spread > 0.01;
    d += fmt("P example: p_c = (%.5f, %.5f) spread %.4f; MC:", s.p_c[0], s.p_c[1], spread);
    StatOptions so;
    so.t_grid = {0.5};
    so.signs = s;
    so.sigma = std::sqrt(0.6);
    for (std::int64_t N : {2000, 2001}) {
      so.eta = static_cast<int>(mod(N, 2));
      const PartitionTable t = m.table(N);
      PolymerSampler sampler(m.bundle, t, Endpoint::Constrained, N);
      std::vector<SampleSummary> sums;
      for (std::uint64_t i = 0; i < 20000; ++i) {
        Rng rng(9, i);
        sums.push_back(summarize(sampler.sample(rng, false), so.t_grid));
      }
      const StatReport r =
          scaling_statistics(sums, Endpoint::Constrained, Regime::Delocalized, N, so);
      const double z = (r.positive_freq_nonzero[0] - s.p_c[so.eta]) /
                       r.positive_stderr_nonzero[0];
      ok = ok && std::abs(z) <= 3.0;
      d += fmt(" eta=%d freq %.4f (z=%.2f)", so.eta, r.positive_freq_nonzero[0], z);
    }
  }
  return ok;
}

StatReport sample_stats(const Model& m, std::int64_t N, Endpoint a, std::int64_t count,
                        bool full, StatOptions so) {
  const PartitionTable t = m.table(N);
  PolymerSampler sampler(m.bundle, t, a, N);
  std::vector<SampleSummary> sums;
  sums.reserve(count);
  for (std::int64_t i = 0; i < count; ++i) {
    Rng rng(2024, static_cast<std::uint64_t>(i));
    sums.push_back(summarize(sampler.sample(rng, full), so.t_grid));
  }
  so.sigma = std::sqrt(2 * m.bundle.p());
  so.F = m.report.F;
  so.eta = static_cast<int>(mod(N, m.bundle.T()));
  if (m.report.regime != Regime::Localized)
    so.signs = sign_constants(m.spectral, m.bundle, m.report);
  return scaling_statistics(sums, a, m.report.regime, N, so);
}

bool c10(std::string& d) {
  bool ok = true;
  {
    const Model m(ChargeSet::zeros(1));
    const StatReport r = sample_stats(m, 5000, Endpoint::Free, 100000, false, {});
    ok = ok && r.ks_last_zero_arcsine < 0.05 && r.ks_endpoint_meander < 0.05;
    d += fmt("critical free: KS arcsine %.4f, KS meander %.4f (< 0.05); ",
             r.ks_last_zero_arcsine, r.ks_endpoint_meander);
  }
  {
    const Model m(pinning({0.4}));
    StatOptions so;
    so.C_grid = {1.5};
    const StatReport r = sample_stats(m, 5000, Endpoint::Constrained, 10000, true, so);
    ok = ok && r.max_exceedance[0] < 0.02;
    d += fmt("localized: P(max|S| > 1.5 log N/F) = %.4f (< 0.02), same for the "
             "longest gap %.4f; ",
             r.max_exceedance[0], r.max_gap_exceedance[0]);
  }
  {
    const Model m(pinning({-0.4}));
    const StatReport r = sample_stats(m, 5000, Endpoint::Constrained, 100000, false, {});
    double top = 0.0;
    for (std::size_t i = 0; i < r.p_G_half.size(); ++i)
      top = std::max(top, r.p_G_half[i] * std::sqrt(double(r.options.L_grid[i])));
    ok = ok && r.envelope_holds;
    d += fmt("delocalized: max_L P(G_{N/2} >= L) sqrt(L) = %.3f <= envelope %.3f",
             top, r.envelope_constant);
  }
  return ok;
}

bool c11(std::string& d) {
  bool ok = true;
  for (const auto& [name, c] : {std::pair<const char*, ChargeSet>{"zero", ChargeSet::zeros(1)},
                                {"pinning 0.4", pinning({0.4})},
                                {"P example", example_in_P()}}) {
    const KernelBundle b(c, law(0.3), 64);
    const PartitionTable t(b, 14);
    const GapBoundResult r = gap_bound_check(b, t, 14);
    ok = ok && r.holds;
    d += fmt("%s: %lld cases, max P/Khat = %.4f; ", name, static_cast<long long>(r.checked),
             r.worst_ratio);
  }
  return ok;
}

}  // namespace

int main() {
  const std::function<bool(std::string&)> criteria[] = {c1, c2, c3, c4, c5, c6,
                                                        c7, c8, c9, c10, c11};
  for (int k = 0; k < 11; ++k) run(k + 1, criteria[k]);
  std::printf("%d of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
