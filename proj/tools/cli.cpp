// copoly command-line front end. Talks to the library only through the C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "copoly/copoly.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kTrend = 4 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ApiError : std::runtime_error {
  copoly_status status;
  ApiError(copoly_status s, const std::string& what)
      : std::runtime_error(what), status(s) {}
};

void check(copoly_status st, const char* what) {
  if (st != COPOLY_OK) {
    throw ApiError(st, std::string(what) + ": " + copoly_last_error());
  }
}

std::string take(char* s) {
  std::string out(s ? s : "");
  copoly_string_free(s);
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Config text plus enough bookkeeping to point at the offending line.
class Config {
 public:
  explicit Config(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    text_ = ss.str();
    try {
      j_ = json::parse(text_);
    } catch (const json::parse_error& e) {
      throw ConfigError(where(e.byte == 0 ? 0 : e.byte - 1) + ": " +
                        strip_prefix(e.what()));
    }
    if (!j_.is_object()) throw ConfigError(path + ":1: top level must be an object");
  }

  const json& root() const { return j_; }
  std::string hash() const { return hex(fnv1a(j_.dump())); }

  // Line of the first occurrence of "key" in the text, for messages.
  std::string at_key(const std::string& key) const {
    const auto pos = text_.find('"' + key + '"');
    return where(pos == std::string::npos ? 0 : pos);
  }

  [[noreturn]] void bad(const std::string& key, const std::string& msg) const {
    throw ConfigError(at_key(key) + ": '" + key + "' " + msg);
  }

 private:
  std::string where(std::size_t byte) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return path_ + ":" + std::to_string(line) + ":" + std::to_string(col);
  }
  static std::string strip_prefix(const std::string& s) {
    const auto p = s.find("] ");
    return p == std::string::npos ? s : s.substr(p + 2);
  }

  std::string path_, text_;
  json j_;
};

struct Charges {
  int T = 0;
  std::vector<double> plus, minus, zero, zero_tilde;
};

struct Settings {
  Charges charges;
  double p = 0.3;
  std::int64_t N = 1000;
  std::int64_t x_max = 0;
  std::uint64_t seed = 1;
  int workers = 1;
  std::optional<int> eta;
  std::vector<std::int64_t> N_list;
  std::string endpoint = "constrained";
  std::optional<double> ratio_tolerance;
  copoly_tolerances tol = copoly_default_tolerances();
  json sample = json::object();
  json localization = json::object();
};

double number(const Config& cfg, const json& obj, const std::string& key) {
  const json& v = obj.at(key);
  if (!v.is_number()) cfg.bad(key, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) cfg.bad(key, "must be finite");
  return d;
}

std::int64_t integer(const Config& cfg, const json& obj, const std::string& key) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) cfg.bad(key, "must be an integer");
  return v.get<std::int64_t>();
}

std::vector<double> array(const Config& cfg, const json& obj,
                          const std::string& key, int T) {
  const json& v = obj.at(key);
  if (!v.is_array()) cfg.bad(key, "must be an array");
  if (static_cast<int>(v.size()) != T) {
    cfg.bad(key, "must have T = " + std::to_string(T) + " entries");
  }
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number() || !std::isfinite(x.get<double>())) {
      cfg.bad(key, "entries must be finite numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

void no_unknown(const Config& cfg, const json& obj,
                const std::vector<std::string>& allowed) {
  for (const auto& [k, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      cfg.bad(k, "is not a recognized key");
    }
  }
}

Settings parse(const Config& cfg) {
  const json& r = cfg.root();
  no_unknown(cfg, r,
             {"charges", "p", "N", "X_max", "seed", "workers", "eta", "N_list",
              "endpoint", "ratio_tolerance", "tolerances", "sample",
              "localization", "comment"});
  Settings s;
  if (r.contains("charges")) {
    const json& c = r.at("charges");
    if (!c.is_object()) cfg.bad("charges", "must be an object");
    no_unknown(cfg, c, {"T", "omega_plus", "omega_minus", "omega_zero",
                        "omega_zero_tilde"});
    for (const char* k : {"T", "omega_plus", "omega_minus", "omega_zero"}) {
      if (!c.contains(k)) cfg.bad("charges", std::string("is missing '") + k + "'");
    }
    const std::int64_t T = integer(cfg, c, "T");
    if (T < 1 || T > 4096) cfg.bad("T", "must lie in [1, 4096]");
    s.charges.T = static_cast<int>(T);
    s.charges.plus = array(cfg, c, "omega_plus", s.charges.T);
    s.charges.minus = array(cfg, c, "omega_minus", s.charges.T);
    s.charges.zero = array(cfg, c, "omega_zero", s.charges.T);
    s.charges.zero_tilde = c.contains("omega_zero_tilde")
                               ? array(cfg, c, "omega_zero_tilde", s.charges.T)
                               : std::vector<double>(s.charges.T, 0.0);
  }
  if (r.contains("p")) {
    s.p = number(cfg, r, "p");
    if (!(s.p > 0.0 && s.p < 0.5)) cfg.bad("p", "must satisfy 0 < p < 1/2");
  }
  if (r.contains("N")) {
    s.N = integer(cfg, r, "N");
    if (s.N < 1) cfg.bad("N", "must be >= 1");
  }
  if (r.contains("X_max")) {
    s.x_max = integer(cfg, r, "X_max");
    if (s.x_max < 2) cfg.bad("X_max", "must be >= 2");
  }
  if (r.contains("seed")) {
    if (!r.at("seed").is_number_unsigned()) cfg.bad("seed", "must be a nonnegative integer");
    s.seed = r.at("seed").get<std::uint64_t>();
  }
  if (r.contains("workers")) {
    const auto w = integer(cfg, r, "workers");
    if (w < 1 || w > 1024) cfg.bad("workers", "must lie in [1, 1024]");
    s.workers = static_cast<int>(w);
  }
  if (r.contains("eta")) {
    const auto e = integer(cfg, r, "eta");
    if (e < 0 || (s.charges.T > 0 && e >= s.charges.T)) cfg.bad("eta", "must lie in [0, T)");
    s.eta = static_cast<int>(e);
  }
  if (r.contains("N_list")) {
    const json& v = r.at("N_list");
    if (!v.is_array() || v.empty()) cfg.bad("N_list", "must be a nonempty array");
    for (const auto& x : v) {
      if (!x.is_number_integer() || x.get<std::int64_t>() < 1) {
        cfg.bad("N_list", "entries must be positive integers");
      }
      s.N_list.push_back(x.get<std::int64_t>());
    }
  }
  if (r.contains("endpoint")) {
    const json& v = r.at("endpoint");
    if (!v.is_string()) cfg.bad("endpoint", "must be a string");
    s.endpoint = v.get<std::string>();
    if (s.endpoint != "constrained" && s.endpoint != "free") {
      cfg.bad("endpoint", "must be \"constrained\" or \"free\"");
    }
  }
  if (r.contains("ratio_tolerance")) {
    s.ratio_tolerance = number(cfg, r, "ratio_tolerance");
    if (!(*s.ratio_tolerance > 0.0)) cfg.bad("ratio_tolerance", "must be positive");
  }
  if (r.contains("tolerances")) {
    const json& t = r.at("tolerances");
    if (!t.is_object()) cfg.bad("tolerances", "must be an object");
    no_unknown(cfg, t, {"h_zero", "sigma_zero", "critical"});
    for (const char* k : {"h_zero", "sigma_zero", "critical"}) {
      if (!t.contains(k)) continue;
      const double v = number(cfg, t, k);
      if (v < 0.0) cfg.bad(k, "must be nonnegative");
      if (std::string(k) == "h_zero") s.tol.h_zero = v;
      if (std::string(k) == "sigma_zero") s.tol.sigma_zero = v;
      if (std::string(k) == "critical") s.tol.critical = v;
    }
  }
  if (r.contains("sample")) {
    s.sample = r.at("sample");
    if (!s.sample.is_object()) cfg.bad("sample", "must be an object");
    no_unknown(cfg, s.sample, {"N", "count", "endpoint", "paths", "full_paths",
                               "t_grid", "L_grid", "C_grid"});
    if (s.sample.contains("count")) {
      const auto c = integer(cfg, s.sample, "count");
      if (c < 1) cfg.bad("count", "must be >= 1");
    }
  }
  if (r.contains("localization")) {
    s.localization = r.at("localization");
    if (!s.localization.is_object()) cfg.bad("localization", "must be an object");
    no_unknown(cfg, s.localization,
               {"count", "T_min", "T_max", "p", "x_max", "seed", "amplitude"});
  }
  return s;
}

struct Model {
  copoly_model* m = nullptr;
  ~Model() { copoly_model_destroy(m); }
};

void open_model(const Config& cfg, const Settings& s, std::int64_t x_max, Model& out) {
  if (s.charges.T == 0) cfg.bad("charges", "are required for this command");
  check(copoly_model_create(s.charges.T, s.charges.plus.data(),
                            s.charges.minus.data(), s.charges.zero.data(),
                            s.charges.zero_tilde.data(), s.p, x_max, &s.tol,
                            &out.m),
        "model");
}

json provenance(const Config& cfg, const Settings& s, const std::string& command) {
  return {{"command", command},
          {"config_hash", cfg.hash()},
          {"library_version", copoly_version()},
          {"tolerances",
           {{"h_zero", s.tol.h_zero},
            {"sigma_zero", s.tol.sigma_zero},
            {"critical", s.tol.critical}}}};
}

void emit(const std::string& out_dir, const std::string& name,
          const std::string& content) {
  if (out_dir.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  fs::create_directories(out_dir);
  std::ofstream f(fs::path(out_dir) / name, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (fs::path(out_dir) / name).string());
  f << content;
  if (!content.empty() && content.back() != '\n') f << '\n';
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double default_ratio_tolerance(copoly_regime r, bool free) {
  switch (r) {
    case COPOLY_LOCALIZED: return 0.01;
    case COPOLY_CRITICAL: return 0.10;
    case COPOLY_DELOCALIZED: return free ? 0.05 : 0.03;
  }
  return 0.1;
}

int cmd_classify(const Config& cfg, const Settings& s, std::int64_t x_max,
                 const std::string& out) {
  Model m;
  open_model(cfg, s, x_max, m);
  json r = json::parse(take([&] {
    char* p = nullptr;
    check(copoly_classify_json(m.m, &p), "classify");
    return p;
  }()));
  r["provenance"] = provenance(cfg, s, "classify");
  std::cerr << r["regime"].get<std::string>() << ", delta="
            << fixed6(r["delta"].get<double>()) << ", F="
            << fixed6(r["F"].get<double>()) << '\n';
  emit(out, "classify.json", r.dump(2));
  return kOk;
}

int cmd_verify(const Config& cfg, const Settings& s, std::int64_t x_max,
               std::int64_t n_max, const std::string& out) {
  Model m;
  open_model(cfg, s, x_max, m);
  const int T = s.charges.T;
  const int eta = s.eta.value_or(0);
  std::vector<std::int64_t> Ns = s.N_list;
  if (Ns.empty()) {
    // Dyadic grid in the class eta up to n_max.
    for (std::int64_t n = 64; n <= n_max; n *= 2) {
      const std::int64_t N = n - ((n - eta) % T + T) % T;
      if (N >= 1 && (Ns.empty() || Ns.back() != N)) Ns.push_back(N);
    }
    if (Ns.empty()) Ns.push_back(eta == 0 ? T : eta);
  }
  for (auto N : Ns) {
    if (N > x_max) cfg.bad("N_list", "entries must not exceed X_max");
    if (((N - eta) % T + T) % T != 0) cfg.bad("N_list", "entries must be = eta mod T");
  }
  const bool free = s.endpoint == "free";
  char* csv = nullptr;
  int trend = 0;
  check(copoly_verify_csv(m.m, eta, Ns.data(), Ns.size(),
                          free ? COPOLY_FREE : COPOLY_CONSTRAINED, &csv, &trend),
        "verify");
  const std::string table = take(csv);
  copoly_regime regime;
  check(copoly_model_regime(m.m, &regime), "regime");
  const double tol = s.ratio_tolerance.value_or(default_ratio_tolerance(regime, free));

  // Final ratio from the last CSV row.
  const auto last_line = table.substr(table.rfind('\n', table.size() - 2) + 1);
  const double final_ratio = std::stod(last_line.substr(last_line.rfind(',') + 1));
  const bool within = std::abs(final_ratio - 1.0) <= tol;
  // Exponentially fast convergence leaves |ratio - 1| at rounding level;
  // accept wobble there.
  const bool trend_ok = trend == 1 || std::abs(final_ratio - 1.0) <= 1e-6;

  json meta = provenance(cfg, s, "verify");
  meta["eta"] = eta;
  meta["endpoint"] = free ? "free" : "constrained";
  meta["ratio_tolerance"] = tol;
  meta["final_ratio"] = final_ratio;
  meta["final_within_tolerance"] = within;
  meta["monotone"] = trend == 1;
  meta["trend_ok"] = trend_ok && within;
  if (out.empty()) {
    std::cout << table;
    std::cerr << meta.dump() << '\n';
  } else {
    emit(out, "verify.csv", table);
    emit(out, "verify.json", meta.dump(2));
  }
  std::cerr << "final ratio " << final_ratio << (within ? " within " : " outside ")
            << "[" << 1 - tol << ", " << 1 + tol << "], trend "
            << (trend_ok ? "pass" : "fail") << '\n';
  return trend_ok && within ? kOk : kTrend;
}

int cmd_constants(const Config& cfg, const Settings& s, std::int64_t x_max,
                  const std::string& out) {
  Model m;
  open_model(cfg, s, x_max, m);
  char* p = nullptr;
  check(copoly_constants_json(m.m, &p), "constants");
  json r = json::parse(take(p));
  r["provenance"] = provenance(cfg, s, "constants");
  emit(out, "constants.json", r.dump(2));
  return kOk;
}

int cmd_sample(const Config& cfg, const Settings& s, std::int64_t x_max,
               const std::string& out) {
  json o = s.sample;
  if (!o.contains("N")) o["N"] = s.N;
  if (!o.contains("endpoint")) o["endpoint"] = s.endpoint;
  o["seed"] = s.seed;
  o["workers"] = s.workers;
  const std::int64_t N = o["N"].get<std::int64_t>();
  if (N < 1) cfg.bad("N", "must be >= 1");
  Model m;
  open_model(cfg, s, std::max(x_max, N), m);
  char* rep = nullptr;
  char* paths = nullptr;
  const bool want_paths = o.value("paths", 0) > 0;
  check(copoly_sample_json(m.m, o.dump().c_str(), &rep, want_paths ? &paths : nullptr),
        "sample");
  json r = json::parse(take(rep));
  r["provenance"] = provenance(cfg, s, "sample");
  emit(out, "stats.json", r.dump(2));
  if (want_paths) {
    const std::string csv = take(paths);
    if (!out.empty()) emit(out, "paths.csv", csv);
  }
  return kOk;
}

int cmd_localization(const Config& cfg, const Settings& s, const std::string& out) {
  json o = s.localization;
  if (!o.contains("p")) o["p"] = s.p;
  if (!o.contains("seed")) o["seed"] = s.seed;
  if (!o.contains("x_max") && s.x_max > 0) o["x_max"] = s.x_max;
  char* p = nullptr;
  check(copoly_localization_check_json(o.dump().c_str(), &p), "localization-check");
  json r = json::parse(take(p));
  r["provenance"] = provenance(cfg, s, "localization-check");
  std::cerr << r["localized"].get<int>() << "/" << r["count"].get<int>()
            << " localized, chain " << r["chain_holds"].get<int>() << ", convex "
            << r["kingman_convex"].get<int>() << '\n';
  emit(out, "localization.json", r.dump(2));
  return r["all_pass"].get<bool>() ? kOk : kTrend;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic copolymer and pinning models"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::int64_t> n_max, x_max_flag;
  app.add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (stdout if omitted)");
  app.add_option("--seed", seed, "RNG seed, overrides the config");
  app.add_option("--workers", workers, "sampler threads")->check(CLI::Range(1, 1024));
  app.add_option("--Nmax", n_max, "largest horizon for verify grids")->check(CLI::PositiveNumber);
  app.add_option("--Xmax", x_max_flag, "kernel table length")->check(CLI::Range(2, 1 << 26));
  app.fallthrough();  // global flags may follow the subcommand
  app.add_subcommand("classify", "regime, free energy and sharp constants");
  app.add_subcommand("verify", "partition functions against their asymptotics (CSV)");
  app.add_subcommand("sample", "exact path sampling and scaling statistics");
  app.add_subcommand("constants", "sign constants and renewal constants");
  app.add_subcommand("localization-check", "random zero-mean copolymer batch");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;  // --help is not an error
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    const Config cfg(config_path);
    Settings s = parse(cfg);
    if (seed) s.seed = *seed;
    if (workers) s.workers = *workers;
    const std::int64_t nmax = n_max.value_or(
        s.N_list.empty() ? std::max<std::int64_t>(s.N, 64) : 0);
    std::int64_t need = nmax;
    for (auto N : s.N_list) need = std::max(need, N);
    need = std::max<std::int64_t>(need, s.sample.value("N", s.N));
    std::int64_t x_max = x_max_flag.value_or(s.x_max > 0 ? s.x_max : std::max<std::int64_t>(need, 100000));

    if (cmd == "classify") return cmd_classify(cfg, s, x_max, out_dir);
    if (cmd == "verify") return cmd_verify(cfg, s, x_max, nmax, out_dir);
    if (cmd == "constants") return cmd_constants(cfg, s, x_max, out_dir);
    if (cmd == "sample") return cmd_sample(cfg, s, x_max, out_dir);
    return cmd_localization(cfg, s, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ApiError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.status == COPOLY_INVALID_INPUT ? kConfig : kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
