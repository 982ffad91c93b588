#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asep/errors.hpp"
#include "asep/finite.hpp"
#include "asep/fredholm.hpp"
#include "asep/identities.hpp"
#include "asep/oracle.hpp"
#include "asep/parallel.hpp"
#include "asep/params.hpp"

namespace asep {

inline constexpr const char* kVersion = "1.0.0";

// exit-code contract
inline constexpr int kExitPass = 0;
inline constexpr int kExitComparisonFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitResourceError = 3;
inline constexpr int kExitParameterError = 4;

/// One run's full configuration; every field has a documented default and the
/// parsers reject unknown keys.
struct RunConfig {
  std::string p = "7/10";            // model.p          hop rate, exact rational
  std::string y = "step";            // model.y          "step" or a position list
  std::string x_target;              // query.X          target configuration (transition-prob)
  long x_lo = 1, x_hi = 1;           // query.x          site or site range
  int m = 1;                         // query.m
  int L = 1;                         // query.L
  std::vector<double> t = {1.0};     // query.t
  std::vector<std::string> methods;  // query.method
  std::size_t nodes = 64;            // contour.nodes
  int k_max = 4;                     // contour.k_max    series truncation
  std::int64_t samples = 100000;     // oracle.samples
  std::uint64_t seed = 1;            // oracle.seed
  double tol = 1e-8;                 // oracle.tol       comparison tolerance
  double z_max = 4.0;                // compare.z_max    MC z-score gate
  int workers = 0;                   // run.workers      0 = hardware default
  std::string out;                   // run.out          output path prefix
  int id_max_n = 5;                  // identities.max_n
  int id_max_l = 2;                  // identities.max_l
  int trials = 10;                   // identities.trials
  bool corrupt = false;              // identities.corrupt   test hook
};

namespace cli_detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

inline long parse_long(const std::string& s) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw config_error("trailing characters in integer: " + s);
    return v;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception&) {
    throw config_error("cannot parse integer: '" + s + "'");
  }
}

inline double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw config_error("trailing characters in number: " + s);
    return v;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception&) {
    throw config_error("cannot parse number: '" + s + "'");
  }
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw config_error("cannot parse boolean: '" + s + "'");
}

}  // namespace cli_detail

/// Apply one dotted key (e.g. "query.m") to the config; unknown keys rejected.
inline void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  using namespace cli_detail;
  if (key == "model.p") {
    cfg.p = value;
  } else if (key == "model.y") {
    cfg.y = value;
  } else if (key == "query.X") {
    cfg.x_target = value;
  } else if (key == "query.x") {
    const auto dots = value.find("..");
    if (dots == std::string::npos) {
      cfg.x_lo = cfg.x_hi = parse_long(value);
    } else {
      cfg.x_lo = parse_long(trim(value.substr(0, dots)));
      cfg.x_hi = parse_long(trim(value.substr(dots + 2)));
    }
    if (cfg.x_hi < cfg.x_lo) throw config_error("empty x range: " + value);
  } else if (key == "query.m") {
    cfg.m = static_cast<int>(parse_long(value));
  } else if (key == "query.L") {
    cfg.L = static_cast<int>(parse_long(value));
  } else if (key == "query.t") {
    cfg.t.clear();
    for (const auto& item : split(value, ',')) cfg.t.push_back(parse_double(item));
    if (cfg.t.empty()) throw config_error("empty t list");
  } else if (key == "query.method") {
    cfg.methods = split(value, ',');
  } else if (key == "contour.nodes") {
    cfg.nodes = static_cast<std::size_t>(parse_long(value));
  } else if (key == "contour.k_max") {
    cfg.k_max = static_cast<int>(parse_long(value));
  } else if (key == "oracle.samples") {
    cfg.samples = parse_long(value);
  } else if (key == "oracle.seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_long(value));
  } else if (key == "oracle.tol") {
    cfg.tol = parse_double(value);
  } else if (key == "compare.z_max") {
    cfg.z_max = parse_double(value);
  } else if (key == "run.workers") {
    cfg.workers = static_cast<int>(parse_long(value));
  } else if (key == "run.out") {
    cfg.out = value;
  } else if (key == "identities.max_n") {
    cfg.id_max_n = static_cast<int>(parse_long(value));
  } else if (key == "identities.max_l") {
    cfg.id_max_l = static_cast<int>(parse_long(value));
  } else if (key == "identities.trials") {
    cfg.trials = static_cast<int>(parse_long(value));
  } else if (key == "identities.corrupt") {
    cfg.corrupt = cli_detail::parse_bool(value);
  } else {
    throw config_error("unknown config key: '" + key + "'");
  }
}

/// Line-oriented sections + `key = value`; '#' starts a comment.
inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = cli_detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = cli_detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = cli_detail::trim(line.substr(0, eq));
    const std::string value = cli_detail::trim(line.substr(eq + 1));
    apply_config_key(cfg, section.empty() ? key : section + "." + key, value);
  }
}

inline ParticleConfig parse_particles(const std::string& spec) {
  if (spec == "step") return ParticleConfig::step_ic();
  std::vector<long> pos;
  for (const auto& item : cli_detail::split(spec, ','))
    if (!item.empty()) pos.push_back(cli_detail::parse_long(item));
  if (pos.empty()) throw config_error("empty particle configuration: '" + spec + "'");
  try {
    return ParticleConfig(std::move(pos));
  } catch (const domain_error& e) {
    throw config_error(std::string("bad particle configuration: ") + e.what());
  }
}

/// One computed instance for report emission.
struct ResultRow {
  long x = 0;
  int m = 1, L = 1;
  double t = 0.0;
  std::string method;
  double value = 0.0;
  double abs_error = 0.0;
  double runtime_ms = 0.0;
};

inline std::string format_sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

inline void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write CSV: " + path);
  out << "x,m,L,t,method,value,abs_error\n";
  for (const auto& r : rows)
    out << r.x << ',' << r.m << ',' << r.L << ',' << format_sci(r.t) << ',' << r.method << ','
        << format_sci(r.value) << ',' << format_sci(r.abs_error) << '\n';
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  return nlohmann::json{
      {"model", {{"p", cfg.p}, {"y", cfg.y}}},
      {"query",
       {{"X", cfg.x_target},
        {"x_lo", cfg.x_lo},
        {"x_hi", cfg.x_hi},
        {"m", cfg.m},
        {"L", cfg.L},
        {"t", cfg.t},
        {"method", cfg.methods}}},
      {"contour", {{"nodes", cfg.nodes}, {"k_max", cfg.k_max}}},
      {"oracle", {{"samples", cfg.samples}, {"seed", cfg.seed}, {"tol", cfg.tol}}},
      {"compare", {{"z_max", cfg.z_max}}},
      {"run", {{"workers", cfg.workers}, {"out", cfg.out}}},
      {"identities",
       {{"max_n", cfg.id_max_n},
        {"max_l", cfg.id_max_l},
        {"trials", cfg.trials},
        {"corrupt", cfg.corrupt}}}};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  cfg.p = j.at("model").at("p").get<std::string>();
  cfg.y = j.at("model").at("y").get<std::string>();
  cfg.x_target = j.at("query").at("X").get<std::string>();
  cfg.x_lo = j.at("query").at("x_lo").get<long>();
  cfg.x_hi = j.at("query").at("x_hi").get<long>();
  cfg.m = j.at("query").at("m").get<int>();
  cfg.L = j.at("query").at("L").get<int>();
  cfg.t = j.at("query").at("t").get<std::vector<double>>();
  cfg.methods = j.at("query").at("method").get<std::vector<std::string>>();
  cfg.nodes = j.at("contour").at("nodes").get<std::size_t>();
  cfg.k_max = j.at("contour").at("k_max").get<int>();
  cfg.samples = j.at("oracle").at("samples").get<std::int64_t>();
  cfg.seed = j.at("oracle").at("seed").get<std::uint64_t>();
  cfg.tol = j.at("oracle").at("tol").get<double>();
  cfg.z_max = j.at("compare").at("z_max").get<double>();
  cfg.workers = j.at("run").at("workers").get<int>();
  cfg.out = j.at("run").at("out").get<std::string>();
  cfg.id_max_n = j.at("identities").at("max_n").get<int>();
  cfg.id_max_l = j.at("identities").at("max_l").get<int>();
  cfg.trials = j.at("identities").at("trials").get<int>();
  cfg.corrupt = j.at("identities").at("corrupt").get<bool>();
  return cfg;
}

inline void write_sidecar(const std::string& path, const std::string& command,
                          const RunConfig& cfg, const std::vector<ResultRow>& rows,
                          double total_ms) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["config"] = config_to_json(cfg);
  j["timing_ms"] = total_ms;
  auto& reports = j["reports"] = nlohmann::json::array();
  for (const auto& r : rows) {
    std::ostringstream inst;
    inst << "x=" << r.x << ",m=" << r.m << ",L=" << r.L << ",t=" << r.t;
    reports.push_back({{"instance", inst.str()},
                       {"method", r.method},
                       {"value", r.value},
                       {"abs_error", r.abs_error},
                       {"runtime_ms", r.runtime_ms}});
  }
  std::ofstream out(path);
  if (!out) throw config_error("cannot write JSON sidecar: " + path);
  out << j.dump(2) << '\n';
}

namespace cli_detail {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

inline void setup_workers(const RunConfig& cfg) {
  if (cfg.workers > 0) set_max_workers(cfg.workers);
}

inline ExactParams exact_params(const RunConfig& cfg) {
  try {
    return ExactParams(parse_rational(cfg.p));
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw parameter_error(std::string("bad p: ") + e.what());
  }
}

/// Compute one (query, method) instance.
inline ResultRow compute_instance(const std::string& method, const ParticleConfig& y,
                                  const BlockQuery& q, const ExactParams& ep,
                                  const ContourPlan& plan, const RunConfig& cfg) {
  Timer timer;
  ProbabilityEstimate est;
  const Method mm = method_from_name(method);
  switch (mm) {
    case Method::thm1: est = block_prob_thm1(y, q, ep, plan); break;
    case Method::thm2: est = block_prob_thm2(y, q, ep, plan); break;
    case Method::thm3: est = theorem3_prob(q, ep, plan); break;
    case Method::series: est = step_series_prob(q, ep, plan, cfg.k_max); break;
    case Method::mc: est = mc_block_prob(y, q, to_real(ep), cfg.samples, cfg.seed); break;
    case Method::uniformization: est = exact_block_prob(y, q, to_real(ep), cfg.tol); break;
    case Method::pxy:
      throw config_error("method 'pxy' applies to transition-prob only");
  }
  return {q.x, q.m, q.L, q.t, method, est.value, est.abs_error, timer.ms()};
}

}  // namespace cli_detail

/// `identities`: run the exact verification suite over the configured grid.
/// Exit 0 iff every non-conjecture check passes.
inline int cmd_identities(const RunConfig& cfg, std::ostream& log) {
  cli_detail::setup_workers(cfg);
  const ExactParams ep = cli_detail::exact_params(cfg);
  cli_detail::Timer total;
  IdentityOptions opt;
  opt.trials = cfg.trials;
  opt.seed = cfg.seed;

  nlohmann::json rows = nlohmann::json::array();
  bool all_pass = true;
  auto record = [&](const CheckReport& rep, double ms) {
    if (!rep.passed && !rep.conjecture) all_pass = false;
    rows.push_back({{"instance", rep.name},
                    {"method", "exact-identity"},
                    {"value", rep.passed ? 1.0 : 0.0},
                    {"abs_error", rep.max_residual},
                    {"runtime_ms", ms},
                    {"status", rep.passed ? "pass" : (rep.conjecture ? "CONJECTURE" : "fail")},
                    {"conjecture", rep.conjecture}});
    log << (rep.passed ? "pass  " : (rep.conjecture ? "CONJ  " : "FAIL  ")) << rep.name << "\n";
  };

  for (int n = 1; n <= cfg.id_max_n; ++n)
    for (int l = 1; l <= std::min(n, cfg.id_max_l); ++l) {
      cli_detail::Timer timer;
      IdentityOptions o1 = opt;
      o1.perturb = cfg.corrupt;
      record(verify_identity_1L(n, l, ep, o1), timer.ms());
      for (int m = 0; m <= n - l; ++m) {
        cli_detail::Timer t2;
        record(verify_identity_2L(n, l, m, ep, opt), t2.ms());
      }
    }
  for (int m = 1; m <= std::min(cfg.id_max_n, 5); ++m) {
    cli_detail::Timer timer;
    record(verify_lemma(m, ep, opt), timer.ms());
  }
  for (int n = 0; n <= cfg.id_max_n; ++n)
    for (int k = 0; k <= n; ++k) {
      cli_detail::Timer timer;
      record(subset_qsum_identity_check(n, k, ep.tau()), timer.ms());
    }
  for (int n = 2; n <= cfg.id_max_n; ++n)
    for (int l = 1; l <= std::min(n, cfg.id_max_l); ++l)
      for (int m = 1; m <= n - l + 1; ++m)
        for (int T = m + l - 1; T <= n; ++T) {
          cli_detail::Timer timer;
          record(verify_appendixB_sum(n, l, m, T, ep), timer.ms());
        }
  for (int n = 1; n <= cfg.id_max_n; ++n)
    for (int l = 1; l <= std::min(n, cfg.id_max_l); ++l) {
      cli_detail::Timer timer;
      record(probe_inversion_conjecture(n, l, ep, opt), timer.ms());
    }

  if (!cfg.out.empty()) {
    nlohmann::json j;
    j["command"] = "identities";
    j["version"] = kVersion;
    j["config"] = config_to_json(cfg);
    j["timing_ms"] = total.ms();
    j["reports"] = rows;
    std::ofstream out(cfg.out + ".json");
    if (!out) throw config_error("cannot write " + cfg.out + ".json");
    out << j.dump(2) << '\n';
  }
  return all_pass ? kExitPass : kExitComparisonFailure;
}

namespace cli_detail {
inline std::vector<ResultRow> run_block_grid(const RunConfig& cfg, const ParticleConfig& y,
                                             const std::vector<std::string>& methods,
                                             std::ostream& log) {
  const ExactParams ep = exact_params(cfg);
  const ContourPlan plan = make_default_plan(to_real(ep), cfg.nodes);
  std::vector<ResultRow> rows;
  for (double t : cfg.t)
    for (long x = cfg.x_lo; x <= cfg.x_hi; ++x) {
      const BlockQuery q{x, cfg.m, cfg.L, t};
      for (const auto& method : methods) {
        rows.push_back(compute_instance(method, y, q, ep, plan, cfg));
        const auto& r = rows.back();
        log << r.method << "  x=" << r.x << " m=" << r.m << " L=" << r.L << " t=" << r.t
            << "  value=" << format_sci(r.value) << "  err=" << format_sci(r.abs_error) << "\n";
      }
    }
  return rows;
}

inline void emit_outputs(const RunConfig& cfg, const std::string& command,
                         const std::vector<ResultRow>& rows, double ms) {
  if (cfg.out.empty()) return;
  write_csv(cfg.out + ".csv", rows);
  write_sidecar(cfg.out + ".json", command, cfg, rows, ms);
}
}  // namespace cli_detail

/// `block-prob`: finite-Y block probabilities via the selected methods.
inline int cmd_block_prob(const RunConfig& cfg, std::ostream& log) {
  cli_detail::setup_workers(cfg);
  cli_detail::Timer total;
  const ParticleConfig y = parse_particles(cfg.y);
  if (y.step) throw config_error("block-prob needs a finite Y; use step-block-prob for step IC");
  std::vector<std::string> methods =
      cfg.methods.empty() ? std::vector<std::string>{"thm1"} : cfg.methods;
  auto rows = cli_detail::run_block_grid(cfg, y, methods, log);
  cli_detail::emit_outputs(cfg, "block-prob", rows, total.ms());
  return kExitPass;
}

/// `step-block-prob`: step-IC block probabilities (thm3 / series / mc).
inline int cmd_step_block_prob(const RunConfig& cfg, std::ostream& log) {
  cli_detail::setup_workers(cfg);
  cli_detail::Timer total;
  const ParticleConfig y = parse_particles(cfg.y);
  if (!y.step) throw config_error("step-block-prob runs on step IC; set y = step");
  std::vector<std::string> methods =
      cfg.methods.empty() ? std::vector<std::string>{"thm3"} : cfg.methods;
  for (const auto& m : methods)
    if (m == "thm1" || m == "thm2" || m == "uniformization" || m == "oracle")
      throw parameter_error("method '" + m + "' needs a finite Y");
  auto rows = cli_detail::run_block_grid(cfg, y, methods, log);
  cli_detail::emit_outputs(cfg, "step-block-prob", rows, total.ms());
  return kExitPass;
}

/// `transition-prob`: P_Y(X, t) by Eq. PXY, cross-checkable with the oracle.
inline int cmd_transition_prob(const RunConfig& cfg, std::ostream& log) {
  cli_detail::setup_workers(cfg);
  cli_detail::Timer total;
  const ParticleConfig y = parse_particles(cfg.y);
  if (y.step) throw config_error("transition-prob needs finite Y");
  if (cfg.x_target.empty()) throw config_error("transition-prob needs query.X (--X)");
  const ParticleConfig x = parse_particles(cfg.x_target);
  const ExactParams ep = cli_detail::exact_params(cfg);
  const ContourPlan plan = make_default_plan(to_real(ep), cfg.nodes);
  std::vector<std::string> methods =
      cfg.methods.empty() ? std::vector<std::string>{"pxy"} : cfg.methods;

  std::vector<ResultRow> rows;
  for (double t : cfg.t)
    for (const auto& method : methods) {
      cli_detail::Timer timer;
      ProbabilityEstimate est;
      if (method == "pxy") {
        est = transition_prob(y, x, t, ep, plan);
      } else if (method == "uniformization" || method == "oracle") {
        est = exact_transition_prob(y, x, t, to_real(ep), cfg.tol);
      } else {
        throw config_error("transition-prob supports methods pxy, uniformization");
      }
      rows.push_back({x.positions.front(), 1, 1, t, method, est.value, est.abs_error,
                      timer.ms()});
      log << method << "  t=" << t << "  value=" << format_sci(est.value)
          << "  err=" << format_sci(est.abs_error) << "\n";
    }
  cli_detail::emit_outputs(cfg, "transition-prob", rows, total.ms());
  return kExitPass;
}

/// `oracle`: ground-truth estimators only.
inline int cmd_oracle(const RunConfig& cfg, std::ostream& log) {
  cli_detail::setup_workers(cfg);
  cli_detail::Timer total;
  const ParticleConfig y = parse_particles(cfg.y);
  std::vector<std::string> methods =
      cfg.methods.empty()
          ? (y.step ? std::vector<std::string>{"mc"} : std::vector<std::string>{"uniformization"})
          : cfg.methods;
  for (const auto& m : methods)
    if (m != "mc" && m != "uniformization" && m != "oracle")
      throw config_error("oracle supports methods mc, uniformization");
  if (y.step)
    for (const auto& m : methods)
      if (m != "mc") throw parameter_error("step IC oracle is Monte Carlo only");
  auto rows = cli_detail::run_block_grid(cfg, y, methods, log);
  cli_detail::emit_outputs(cfg, "oracle", rows, total.ms());
  return kExitPass;
}

/// Pairwise comparison rows with pass/fail against declared tolerances.
struct ComparisonReport {
  struct Row {
    std::string instance;
    std::string method_a, method_b;
    double value_a = 0.0, value_b = 0.0;
    double abs_diff = 0.0, rel_diff = 0.0;
    double z_score = 0.0;  // only for comparisons against mc
    bool pass = true;
  };
  std::vector<Row> rows;
  double max_abs_diff = 0.0;
  bool all_pass = true;
};

/// `compare`: run >= 2 methods over the grid and gate on |diff| <= tol
/// (formula-formula) or z <= z_max (formula-MC).  No silent clamping.
inline int cmd_compare(const RunConfig& cfg, std::ostream& log) {
  cli_detail::setup_workers(cfg);
  cli_detail::Timer total;
  if (cfg.methods.size() < 2) throw config_error("compare needs at least two methods");
  const ParticleConfig y = parse_particles(cfg.y);
  auto rows = cli_detail::run_block_grid(cfg, y, cfg.methods, log);

  ComparisonReport report;
  const std::size_t k = cfg.methods.size();
  for (std::size_t base = 0; base + k <= rows.size(); base += k) {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) {
        const auto& a = rows[base + i];
        const auto& b = rows[base + j];
        ComparisonReport::Row row;
        std::ostringstream inst;
        inst << "x=" << a.x << ",m=" << a.m << ",L=" << a.L << ",t=" << a.t;
        row.instance = inst.str();
        row.method_a = a.method;
        row.method_b = b.method;
        row.value_a = a.value;
        row.value_b = b.value;
        row.abs_diff = std::abs(a.value - b.value);
        row.rel_diff = row.abs_diff / std::max({std::abs(a.value), std::abs(b.value), 1e-300});
        const bool a_mc = a.method == "mc", b_mc = b.method == "mc";
        if (a_mc || b_mc) {
          const double se = (a_mc ? a.abs_error : b.abs_error) / 4.0;  // mc carries 4 SE
          row.z_score = row.abs_diff / std::max(se, 1e-300);
          row.pass = row.z_score <= cfg.z_max;
        } else {
          row.pass = row.abs_diff <= cfg.tol;  // the declared tolerance decides, nothing else
        }
        report.max_abs_diff = std::max(report.max_abs_diff, row.abs_diff);
        if (!row.pass) report.all_pass = false;
        report.rows.push_back(std::move(row));
      }
  }
  log << "compare: " << report.rows.size() << " pairs, max |diff| = "
      << format_sci(report.max_abs_diff) << (report.all_pass ? "  [pass]" : "  [FAIL]") << "\n";

  if (!cfg.out.empty()) {
    write_csv(cfg.out + ".csv", rows);
    nlohmann::json j;
    j["command"] = "compare";
    j["version"] = kVersion;
    j["config"] = config_to_json(cfg);
    j["timing_ms"] = total.ms();
    j["max_abs_diff"] = report.max_abs_diff;
    j["all_pass"] = report.all_pass;
    auto& rj = j["reports"] = nlohmann::json::array();
    for (const auto& r : report.rows)
      rj.push_back({{"instance", r.instance},
                    {"method", r.method_a + " vs " + r.method_b},
                    {"value", r.abs_diff},
                    {"abs_error", r.rel_diff},
                    {"runtime_ms", 0.0},
                    {"z_score", r.z_score},
                    {"pass", r.pass}});
    std::ofstream out(cfg.out + ".json");
    if (!out) throw config_error("cannot write " + cfg.out + ".json");
    out << j.dump(2) << '\n';
  }
  return report.all_pass ? kExitPass : kExitComparisonFailure;
}

/// Map exceptions onto the stable exit-code contract.
template <class F>
int run_command(F&& f, std::ostream& err) {
  try {
    return f();
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const resource_error& e) {
    err << "resource error: " << e.what() << "\n";
    return kExitResourceError;
  } catch (const parameter_error& e) {
    err << "parameter error: " << e.what() << "\n";
    return kExitParameterError;
  } catch (const domain_error& e) {
    err << "domain error: " << e.what() << "\n";
    return kExitParameterError;
  } catch (const error& e) {
    err << "error: " << e.what() << "\n";
    return kExitResourceError;
  }
}

}  // namespace asep
