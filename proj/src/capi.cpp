#include "copoly/copoly.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "copoly/asymptotics.hpp"
#include "copoly/error.hpp"
#include "copoly/polymer.hpp"
#include "copoly/renewal.hpp"

using nlohmann::json;
using namespace copoly;

struct copoly_model {
  ChargeSet raw;
  double p = 0.0;
  std::int64_t x_max = 0;
  Tolerances tol;
  ReturnLaw law;
  std::unique_ptr<KernelBundle> bundle;
  SpectralData spec;
  RegimeReport report;
  std::unique_ptr<PartitionTable> table;
  std::mutex mu;  // guards table
};

namespace {

thread_local std::string g_last_error;

copoly_status set_error(copoly_status st, const std::string& msg) {
  g_last_error = msg;
  return st;
}

template <typename F>
copoly_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return COPOLY_OK;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::InvalidInput: return set_error(COPOLY_INVALID_INPUT, e.what());
      case ErrorCode::NumericalFailure: return set_error(COPOLY_NUMERICAL, e.what());
      case ErrorCode::InvalidState: return set_error(COPOLY_INVALID_STATE, e.what());
    }
    return set_error(COPOLY_INTERNAL, e.what());
  } catch (const json::exception& e) {
    return set_error(COPOLY_INVALID_INPUT, e.what());
  } catch (const std::exception& e) {
    return set_error(COPOLY_INTERNAL, e.what());
  } catch (...) {
    return set_error(COPOLY_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* ptr, const char* what) {
  if (!ptr) fail(ErrorCode::InvalidInput, std::string(what) + " is null");
}

const PartitionTable& table_for(copoly_model& m, std::int64_t N) {
  std::lock_guard lock(m.mu);
  if (!m.table || m.table->N() < N) {
    require(N <= m.x_max, "horizon exceeds X_max");
    const double tilt = m.report.regime == Regime::Localized ? m.spec.F : 0.0;
    m.table = std::make_unique<PartitionTable>(*m.bundle, N, tilt);
  }
  return *m.table;
}

json vec(const std::vector<double>& v) { return json(v); }

json tolerances_json(const Tolerances& t) {
  return {{"h_zero", t.h_zero}, {"sigma_zero", t.sigma_zero}, {"critical", t.critical}};
}

json report_json(const copoly_model& m) {
  const RegimeReport& r = m.report;
  json j;
  j["regime"] = to_string(r.regime);
  j["delta"] = r.delta;
  j["F"] = r.F;
  j["mu"] = std::isfinite(r.mu) ? json(r.mu) : json("inf");
  j["h"] = m.bundle->h();
  j["sigma_zero"] = is_zero_sigma(m.bundle->sigma(), m.tol);
  j["T"] = m.bundle->T();
  j["p"] = m.p;
  j["X_max"] = m.x_max;
  j["cK"] = m.bundle->cK();
  j["in_P"] = r.in_P;
  j["tail_error"] = r.tail_error;
  j["constants"] = {
      {"C_gt", vec(r.Cgt)}, {"C_eq", vec(r.Ceq)}, {"C_lt", vec(r.Clt)},
      {"C_gt_free", vec(r.Cgt_f)}, {"C_eq_free", vec(r.Ceq_f)},
      {"C_lt_free", vec(r.Clt_f)}};
  if (r.regime == Regime::Delocalized) j["condition"] = r.condition;
  j["spectral_residual"] = m.spec.residual;
  j["tolerances"] = tolerances_json(m.tol);
  return j;
}

json signs_json(const SignConstants& s) {
  json j;
  if (!s.p_c.empty()) j["p_c"] = s.p_c;
  if (!s.p_f.empty()) j["p_f"] = s.p_f;
  if (s.p_crit) j["p_crit"] = *s.p_crit;
  if (!s.q_crit.empty()) j["q_crit"] = s.q_crit;
  return j;
}

template <typename T>
T opt(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Endpoint parse_endpoint(const std::string& s) {
  if (s == "constrained" || s == "c") return Endpoint::Constrained;
  if (s == "free" || s == "f") return Endpoint::Free;
  fail(ErrorCode::InvalidInput, "endpoint must be \"constrained\" or \"free\"");
}

}  // namespace

extern "C" {

const char* copoly_version(void) { return "0.1.0"; }

const char* copoly_last_error(void) { return g_last_error.c_str(); }

void copoly_string_free(char* s) { std::free(s); }

copoly_tolerances copoly_default_tolerances(void) {
  const Tolerances t;
  return {t.h_zero, t.sigma_zero, t.critical};
}

copoly_status copoly_model_create(int T, const double* omega_plus,
                                  const double* omega_minus,
                                  const double* omega_zero,
                                  const double* omega_zero_tilde, double p,
                                  int64_t x_max, const copoly_tolerances* tol,
                                  copoly_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    require(T >= 1, "T must be >= 1");
    need(omega_plus, "omega_plus");
    need(omega_minus, "omega_minus");
    need(omega_zero, "omega_zero");
    auto m = std::make_unique<copoly_model>();
    m->raw.T = T;
    m->raw.omega_plus.assign(omega_plus, omega_plus + T);
    m->raw.omega_minus.assign(omega_minus, omega_minus + T);
    m->raw.omega_zero.assign(omega_zero, omega_zero + T);
    if (omega_zero_tilde) {
      m->raw.omega_zero_tilde.assign(omega_zero_tilde, omega_zero_tilde + T);
    } else {
      m->raw.omega_zero_tilde.assign(T, 0.0);
    }
    m->raw.validate();
    if (tol) {
      require(tol->h_zero >= 0 && tol->sigma_zero >= 0 && tol->critical >= 0,
              "tolerances must be nonnegative");
      m->tol = {tol->h_zero, tol->sigma_zero, tol->critical};
    }
    m->p = p;
    m->x_max = x_max;
    require(x_max >= 2, "X_max must be >= 2");
    m->law = return_law(WalkModel(p), x_max);
    m->bundle = std::make_unique<KernelBundle>(m->raw, m->law, x_max, m->tol);
    m->spec = free_energy(*m->bundle);
    m->report = constants(m->spec, *m->bundle);
    *out = m.release();
  });
}

void copoly_model_destroy(copoly_model* m) { delete m; }

copoly_status copoly_model_delta(copoly_model* m, double* out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    *out = m->spec.delta;
  });
}

copoly_status copoly_model_free_energy(copoly_model* m, double* out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    *out = m->spec.F;
  });
}

copoly_status copoly_model_regime(copoly_model* m, copoly_regime* out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    switch (m->report.regime) {
      case Regime::Localized: *out = COPOLY_LOCALIZED; break;
      case Regime::Critical: *out = COPOLY_CRITICAL; break;
      case Regime::Delocalized: *out = COPOLY_DELOCALIZED; break;
    }
  });
}

copoly_status copoly_log_partition(copoly_model* m, copoly_endpoint endpoint,
                                   int64_t shift, int64_t n, double* out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    require(n >= 0, "n must be >= 0");
    const auto& t = table_for(*m, n);
    *out = t.log_partition(endpoint == COPOLY_FREE ? Endpoint::Free
                                                   : Endpoint::Constrained,
                           shift, n);
  });
}

copoly_status copoly_classify_json(copoly_model* m, char** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    *out = dup_string(report_json(*m).dump(2));
  });
}

copoly_status copoly_verify_csv(copoly_model* m, int eta, const int64_t* N_list,
                                size_t n, copoly_endpoint endpoint, char** csv,
                                int* trend_ok) {
  return guarded([&] {
    need(m, "model");
    need(csv, "csv");
    require(n > 0, "N_list is empty");
    need(N_list, "N_list");
    std::vector<std::int64_t> Ns(N_list, N_list + n);
    std::int64_t top = 0;
    for (auto N : Ns) top = std::max(top, N);
    const auto& table = table_for(*m, top);
    const ConvergenceTable ct = verify_asymptotics(
        m->report, table, eta, Ns,
        endpoint == COPOLY_FREE ? Endpoint::Free : Endpoint::Constrained);
    std::ostringstream os;
    os.precision(17);
    os << "N,log_Z,log_prediction,ratio\n";
    for (const auto& r : ct.rows) {
      os << r.N << ',' << r.log_Z << ',' << r.log_prediction << ',' << r.ratio
         << '\n';
    }
    *csv = dup_string(os.str());
    if (trend_ok) *trend_ok = ct.monotone ? 1 : 0;
  });
}

copoly_status copoly_constants_json(copoly_model* m, char** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    json j;
    j["regime"] = to_string(m->report.regime);
    j["delta"] = m->spec.delta;
    j["F"] = m->spec.F;
    if (m->report.regime != Regime::Localized) {
      j["signs"] = signs_json(sign_constants(m->spec, *m->bundle, m->report));
    }
    if (m->report.regime != Regime::Delocalized) {
      const SemiMarkovKernel gamma = gamma_kernel(m->spec, *m->bundle);
      json cb = json::array();
      for (int b = 0; b < m->bundle->T(); ++b) {
        const CBeta c = c_beta(m->spec, *m->bundle, b);
        cb.push_back({{"beta", b}, {"value", c.value}, {"via_lhat", c.via_lhat},
                      {"via_matrix", c.via_matrix}});
      }
      j["c_beta"] = cb;
      j["visit_identity_residual"] = visit_identity_residual(gamma.embedded_chain());
      if (m->spec.critical) {
        // Green function ratios along x = T, 2T, ... up to min(X_max, 10^4).
        const int T = m->bundle->T();
        const std::int64_t top = std::min<std::int64_t>(m->x_max, 10000);
        const GreenTable g = green_function(gamma, top);
        std::vector<std::int64_t> xs;
        for (std::int64_t x = T * 16; x <= top; x *= 2) xs.push_back(x - x % T);
        if (xs.empty() || xs.back() != top - top % T) xs.push_back(top - top % T);
        json rows = json::array();
        for (const auto& r : doney_check(g, m->spec, cb[0]["value"].get<double>(), 0,
                                         0, xs)) {
          rows.push_back({{"x", r.x}, {"ratio", r.ratio}});
        }
        j["green_ratio"] = rows;
      }
    }
    j["tolerances"] = tolerances_json(m->tol);
    *out = dup_string(j.dump(2));
  });
}

copoly_status copoly_sample_json(copoly_model* m, const char* options_json,
                                 char** report_out, char** paths_csv) {
  return guarded([&] {
    need(m, "model");
    need(report_out, "report");
    const json o = options_json && *options_json ? json::parse(options_json)
                                                 : json::object();
    const std::int64_t N = opt<std::int64_t>(o, "N", 1000);
    const std::int64_t count = opt<std::int64_t>(o, "count", 10000);
    const Endpoint endpoint =
        parse_endpoint(opt<std::string>(o, "endpoint", "constrained"));
    const std::uint64_t seed = opt<std::uint64_t>(o, "seed", 1);
    const int workers = std::max(1, opt<int>(o, "workers", 1));
    const std::int64_t keep = opt<std::int64_t>(o, "paths", 0);
    const int T = m->bundle->T();
    require(N >= 1, "N must be >= 1");
    require(count >= 1, "count must be >= 1");
    require(keep >= 0 && keep <= count, "paths must lie in [0, count]");

    StatOptions so;
    if (o.contains("t_grid")) so.t_grid = o.at("t_grid").get<std::vector<double>>();
    if (o.contains("L_grid")) so.L_grid = o.at("L_grid").get<std::vector<std::int64_t>>();
    if (o.contains("C_grid")) so.C_grid = o.at("C_grid").get<std::vector<double>>();
    so.sigma = std::sqrt(2.0 * m->p);
    so.F = m->spec.F;
    so.eta = static_cast<int>(mod(N, T));
    const Regime regime = m->report.regime;
    if (regime != Regime::Localized) {
      so.signs = sign_constants(m->spec, *m->bundle, m->report);
    }
    const bool full = opt<bool>(o, "full_paths", regime == Regime::Localized);

    const PartitionTable& table = table_for(*m, N);
    std::vector<SampleSummary> summaries(static_cast<std::size_t>(count));
    std::vector<std::vector<std::int64_t>> kept(static_cast<std::size_t>(keep));
    std::vector<std::string> errors(static_cast<std::size_t>(workers));

    auto work = [&](int w) {
      try {
        PolymerSampler sampler(*m->bundle, table, endpoint, N);
        for (std::int64_t i = w; i < count; i += workers) {
          Rng rng(seed, static_cast<std::uint64_t>(i));
          PolymerSample s = sampler.sample(rng, full || i < keep);
          summaries[i] = summarize(s, so.t_grid);
          if (!full) summaries[i].max_abs = -1;
          if (i < keep) kept[i] = std::move(s.heights);
        }
      } catch (const std::exception& e) {
        errors[w] = e.what();
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
      if (!e.empty()) fail(ErrorCode::NumericalFailure, "sampler: " + e);
    }

    json j;
    j["regime"] = to_string(regime);
    j["endpoint"] = endpoint == Endpoint::Free ? "free" : "constrained";
    j["N"] = N;
    j["samples"] = count;
    j["seed"] = seed;
    j["eta"] = so.eta;
    j["delta"] = m->spec.delta;
    j["F"] = m->spec.F;
    j["sigma"] = so.sigma;
    if (so.signs) j["signs"] = signs_json(*so.signs);
    if (count >= 10000) {
      const StatReport r = scaling_statistics(summaries, endpoint, regime, N, so);
      json t;
      t["t_grid"] = so.t_grid;
      t["positive_freq"] = r.positive_freq;
      t["positive_stderr"] = r.positive_stderr;
      t["positive_reference"] = r.positive_reference;
      t["positive_freq_nonzero"] = r.positive_freq_nonzero;
      t["positive_stderr_nonzero"] = r.positive_stderr_nonzero;
      t["end_positive_freq"] = r.end_positive_freq;
      t["end_positive_freq_nonzero"] = r.end_positive_freq_nonzero;
      t["end_positive_stderr_nonzero"] = r.end_positive_stderr_nonzero;
      t["end_positive_stderr"] = r.end_positive_stderr;
      t["end_positive_reference"] = r.end_positive_reference;
      switch (regime) {
        case Regime::Localized:
          t["C_grid"] = so.C_grid;
          t["max_exceedance"] = r.max_exceedance;
          t["max_gap_exceedance"] = r.max_gap_exceedance;
          break;
        case Regime::Delocalized:
          t["L_grid"] = so.L_grid;
          t["p_G_N"] = r.p_G_N;
          t["p_G_half"] = r.p_G_half;
          t["p_D_half"] = r.p_D_half;
          t["envelope_constant"] = r.envelope_constant;
          t["envelope_holds"] = r.envelope_holds;
          break;
        case Regime::Critical:
          if (endpoint == Endpoint::Free) {
            t["ks_last_zero_arcsine"] = r.ks_last_zero_arcsine;
            t["ks_endpoint_half_normal"] = r.ks_endpoint_half_normal;
            t["ks_endpoint_meander"] = r.ks_endpoint_meander;
          }
          break;
      }
      j["statistics"] = t;
    } else {
      j["statistics"] = nullptr;
      j["note"] = "statistics need at least 10000 samples";
    }
    j["tolerances"] = tolerances_json(m->tol);
    *report_out = dup_string(j.dump(2));

    if (paths_csv) {
      std::ostringstream os;
      os << "sample,n,S_n\n";
      for (std::int64_t i = 0; i < keep; ++i) {
        for (std::size_t n = 0; n < kept[i].size(); ++n) {
          os << i << ',' << n << ',' << kept[i][n] << '\n';
        }
      }
      *paths_csv = dup_string(os.str());
    }
  });
}

copoly_status copoly_gap_bound_check(copoly_model* m, int64_t N, int* holds,
                                     double* worst) {
  return guarded([&] {
    need(m, "model");
    require(N >= 1 && N <= 64, "gap bound check is exhaustive; use N <= 64");
    const auto& table = table_for(*m, N);
    const GapBoundResult r = gap_bound_check(*m->bundle, table, N);
    if (holds) *holds = r.holds ? 1 : 0;
    if (worst) *worst = r.worst_ratio;
  });
}

copoly_status copoly_localization_check_json(const char* options_json,
                                             char** out) {
  return guarded([&] {
    need(out, "out");
    const json o = options_json && *options_json ? json::parse(options_json)
                                                 : json::object();
    const int count = opt<int>(o, "count", 200);
    const int T_min = opt<int>(o, "T_min", 2);
    const int T_max = opt<int>(o, "T_max", 6);
    const double p = opt<double>(o, "p", 0.3);
    const std::int64_t x_max = opt<std::int64_t>(o, "x_max", 100000);
    const std::uint64_t seed = opt<std::uint64_t>(o, "seed", 1);
    const double amp = opt<double>(o, "amplitude", 1.0);
    require(count >= 1, "count must be >= 1");
    require(T_min >= 2 && T_max >= T_min, "need 2 <= T_min <= T_max");
    require(amp > 0.0, "amplitude must be positive");

    const ReturnLaw law = return_law(WalkModel(p), x_max);
    json rows = json::array();
    int localized = 0, chain = 0, convex = 0;
    double min_excess = kInf;
    for (int i = 0; i < count; ++i) {
      Rng rng(seed, static_cast<std::uint64_t>(i));
      const int T = T_min + static_cast<int>(rng.below(T_max - T_min + 1));
      ChargeSet c = ChargeSet::zeros(T);
      // Zero-mean omega_minus with omega_plus = 0: a copolymer with h = 0.
      double mean = 0.0;
      for (int a = 0; a < T; ++a) {
        c.omega_minus[a] = amp * (2.0 * rng.uniform() - 1.0);
        mean += c.omega_minus[a];
      }
      mean /= T;
      for (int a = 0; a < T; ++a) c.omega_minus[a] -= mean;
      const LocalizationCheck lc = copolymer_localization_check(c, law, x_max);
      localized += lc.localized;
      chain += lc.chain_holds;
      convex += lc.kingman_convex;
      min_excess = std::min(min_excess, lc.delta - 1.0);
      rows.push_back({{"T", T},
                      {"omega_minus", c.omega_minus},
                      {"delta", lc.delta},
                      {"z_B", lc.z_B},
                      {"z_Btilde", lc.z_Btilde},
                      {"z_Bhat", lc.z_Bhat},
                      {"z_C", lc.z_C},
                      {"chain_holds", lc.chain_holds},
                      {"kingman_min_second_difference",
                       lc.kingman_min_second_difference},
                      {"localized", lc.localized}});
    }
    json j;
    j["count"] = count;
    j["p"] = p;
    j["X_max"] = x_max;
    j["seed"] = seed;
    j["localized"] = localized;
    j["chain_holds"] = chain;
    j["kingman_convex"] = convex;
    j["min_delta_minus_one"] = min_excess;
    j["all_pass"] = localized == count && chain == count && convex == count;
    j["cases"] = rows;
    *out = dup_string(j.dump(2));
  });
}

}  // extern "C"
