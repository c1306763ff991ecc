#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "fishermarket/dynamics.hpp"
#include "fishermarket/json_io.hpp"
#include "fishermarket/scenario.hpp"
#include "fishermarket/scenarios.hpp"
#include "fishermarket/solvers.hpp"
#include "fishermarket/svg.hpp"

namespace fishermarket {

enum class Scheme { me, so, ss };

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::me: return "ME";
    case Scheme::so: return "SO";
    case Scheme::ss: return "SS";
  }
  return "?";
}

inline std::optional<Scheme> parse_scheme(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (s == "ME") return Scheme::me;
  if (s == "SO") return Scheme::so;
  if (s == "SS") return Scheme::ss;
  return std::nullopt;
}

inline std::vector<double> default_alpha_sweep() {
  std::vector<double> a;
  for (int i = 0; i <= 10; ++i) a.push_back(0.5 * i);
  return a;
}

inline constexpr std::size_t kDeskScaleInstances = 100;
inline constexpr std::size_t kPaperScaleInstances = 2000;

struct ExperimentConfig {
  std::string scenario = "preset";  // "preset" or a scenario JSON path
  bool resample_loads = true;       // draw user counts per instance from `load`
  LoadModel load;
  std::vector<double> alphas = default_alpha_sweep();
  std::size_t instances = kDeskScaleInstances;
  std::vector<Scheme> schemes = {Scheme::me, Scheme::so, Scheme::ss};

  struct BudgetSweep {
    bool enabled = true;
    std::string provider = "SP1";  // name, or index when numeric
    std::vector<double> fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> alphas = {1.0, 2.0, 3.0};
  } budget_sweep;

  struct Trace {
    bool enabled = true;
    double alpha = 1.0;
    std::string cell = "2";  // empty: every cell
    std::size_t iterations = 200;
  } trace;

  std::string out = "results";
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  SolverConfig solver;

  void validate() const {
    if (schemes.empty()) throw UsageError("$.schemes", "at least one scheme is required");
    if (alphas.empty()) throw UsageError("$.alphas", "at least one alpha is required");
    for (std::size_t i = 0; i < alphas.size(); ++i)
      if (!(alphas[i] >= 0.0)) throw UsageError("$.alphas[" + std::to_string(i) + "]", "alpha must be nonnegative");
    if (instances < 1) throw UsageError("$.instances", "must be at least 1");
    if (jobs < 1) throw UsageError("$.jobs", "must be at least 1");
    for (std::size_t i = 0; i < budget_sweep.fractions.size(); ++i)
      if (!(budget_sweep.fractions[i] > 0.0 && budget_sweep.fractions[i] < 1.0))
        throw UsageError("$.budget_sweep.fractions[" + std::to_string(i) + "]", "must lie in (0, 1)");
    if (trace.enabled && trace.alpha < 1.0) throw UsageError("$.trace.alpha", "bid dynamics need alpha >= 1");
    try {
      load.validate();
      solver.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError("$", e.what());
    }
  }
};

namespace experiment_detail {

inline void reject_unknown(const Json& obj, const std::string& path, std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw UsageError(path + "." + it.key(), "unknown field");
  }
}

inline std::vector<double> alpha_list(const Json& v, const std::string& path) {
  const auto& arr = json_detail::as_array(v, path);
  std::vector<double> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(parse_alpha(arr[i], json_detail::at(path, i)));
  return out;
}

inline std::vector<double> number_list(const Json& v, const std::string& path) {
  const auto& arr = json_detail::as_array(v, path);
  std::vector<double> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(json_detail::as_number(arr[i], json_detail::at(path, i)));
  return out;
}

inline bool as_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) throw UsageError(path, "expected true or false");
  return v.get<bool>();
}

}  // namespace experiment_detail

inline ExperimentConfig experiment_config_from_json(const Json& doc) {
  using namespace json_detail;
  using namespace experiment_detail;
  ExperimentConfig c;
  if (!doc.is_object()) throw UsageError("$", "experiment config must be a JSON object");
  reject_unknown(doc, "$", {"scenario", "resample_loads", "load", "alphas", "instances", "schemes", "budget_sweep",
                            "trace", "out", "seed", "jobs", "solver"});
  if (doc.contains("scenario")) c.scenario = as_string(doc["scenario"], "$.scenario");
  c.resample_loads = c.scenario == "preset";
  if (doc.contains("resample_loads")) c.resample_loads = as_bool(doc["resample_loads"], "$.resample_loads");
  if (doc.contains("load")) {
    const auto& l = doc["load"];
    if (!l.is_object()) throw UsageError("$.load", "expected an object");
    reject_unknown(l, "$.load", {"mean", "variance", "spread", "floor", "rounding"});
    if (l.contains("mean")) c.load.mean = as_number(l["mean"], "$.load.mean");
    if (l.contains("variance")) c.load.variance = as_number(l["variance"], "$.load.variance");
    if (l.contains("floor")) c.load.floor = as_number(l["floor"], "$.load.floor");
    if (l.contains("spread")) {
      const auto s = as_string(l["spread"], "$.load.spread");
      if (s == "variance") c.load.spread = LoadModel::Spread::variance;
      else if (s == "stddev") c.load.spread = LoadModel::Spread::stddev;
      else throw UsageError("$.load.spread", "expected \"variance\" or \"stddev\"");
    }
    if (l.contains("rounding")) {
      const auto s = as_string(l["rounding"], "$.load.rounding");
      if (s == "nearest") c.load.rounding = LoadModel::Rounding::nearest;
      else if (s == "down") c.load.rounding = LoadModel::Rounding::down;
      else throw UsageError("$.load.rounding", "expected \"nearest\" or \"down\"");
    }
  }
  if (doc.contains("alphas")) c.alphas = alpha_list(doc["alphas"], "$.alphas");
  if (doc.contains("instances")) c.instances = as_count(doc["instances"], "$.instances");
  if (doc.contains("schemes")) {
    const auto& arr = as_array(doc["schemes"], "$.schemes");
    c.schemes.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto s = parse_scheme(as_string(arr[i], at("$.schemes", i)));
      if (!s) throw UsageError(at("$.schemes", i), "expected ME, SO or SS");
      c.schemes.push_back(*s);
    }
  }
  if (doc.contains("budget_sweep")) {
    const auto& b = doc["budget_sweep"];
    if (b.is_boolean()) {
      c.budget_sweep.enabled = b.get<bool>();
    } else {
      if (!b.is_object()) throw UsageError("$.budget_sweep", "expected an object or a boolean");
      reject_unknown(b, "$.budget_sweep", {"enabled", "provider", "fractions", "alphas"});
      if (b.contains("enabled")) c.budget_sweep.enabled = as_bool(b["enabled"], "$.budget_sweep.enabled");
      if (b.contains("provider")) c.budget_sweep.provider = as_string(b["provider"], "$.budget_sweep.provider");
      if (b.contains("fractions")) c.budget_sweep.fractions = number_list(b["fractions"], "$.budget_sweep.fractions");
      if (b.contains("alphas")) c.budget_sweep.alphas = alpha_list(b["alphas"], "$.budget_sweep.alphas");
    }
  }
  if (doc.contains("trace")) {
    const auto& t = doc["trace"];
    if (t.is_boolean()) {
      c.trace.enabled = t.get<bool>();
    } else {
      if (!t.is_object()) throw UsageError("$.trace", "expected an object or a boolean");
      reject_unknown(t, "$.trace", {"enabled", "alpha", "cell", "iterations"});
      if (t.contains("enabled")) c.trace.enabled = as_bool(t["enabled"], "$.trace.enabled");
      if (t.contains("alpha")) c.trace.alpha = parse_alpha(t["alpha"], "$.trace.alpha");
      if (t.contains("cell")) c.trace.cell = as_string(t["cell"], "$.trace.cell");
      if (t.contains("iterations")) c.trace.iterations = as_count(t["iterations"], "$.trace.iterations");
    }
  }
  if (doc.contains("out")) c.out = as_string(doc["out"], "$.out");
  if (doc.contains("seed")) c.seed = as_count(doc["seed"], "$.seed");
  if (doc.contains("jobs")) c.jobs = as_count(doc["jobs"], "$.jobs");
  if (doc.contains("solver")) {
    const auto& s = doc["solver"];
    if (!s.is_object()) throw UsageError("$.solver", "expected an object");
    reject_unknown(s, "$.solver", {"method", "kappa0", "decay", "max_iterations", "tolerance"});
    if (s.contains("method")) {
      const auto m = as_string(s["method"], "$.solver.method");
      if (m == "auto") c.solver.method = SolverMethod::automatic;
      else if (m == "dynamics") c.solver.method = SolverMethod::dynamics;
      else if (m == "tatonnement") c.solver.method = SolverMethod::tatonnement;
      else if (m == "dual-subgradient") c.solver.method = SolverMethod::dual_subgradient;
      else if (m == "interior-point") c.solver.method = SolverMethod::interior_point;
      else throw UsageError("$.solver.method", "expected auto, dynamics, tatonnement, dual-subgradient or interior-point");
    }
    if (s.contains("kappa0")) c.solver.kappa0 = as_number(s["kappa0"], "$.solver.kappa0");
    if (s.contains("decay")) c.solver.decay = as_number(s["decay"], "$.solver.decay");
    if (s.contains("max_iterations")) c.solver.max_iterations = as_count(s["max_iterations"], "$.solver.max_iterations");
    if (s.contains("tolerance")) c.solver.tolerance = as_number(s["tolerance"], "$.solver.tolerance");
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct ResultRow {
  std::size_t instance = 0;
  double alpha = 0.0;
  Scheme scheme = Scheme::me;
  std::string sp, cell, cls;
  double rate = 0.0;  // average per-user service rate u / n
  double utility = 0.0;
  double welfare = 0.0;
  double nash_welfare = 0.0;
  double poa = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::size_t iterations = 0;
};

struct SweepRow {
  double fraction = 0.0;
  ResultRow row;
};

struct TracePoint {
  std::size_t iteration = 0;
  std::string cell, resource;
  double price = 0.0;
};

struct ResultSet {
  std::vector<ResultRow> rows;
  std::vector<SweepRow> sweep;
  std::vector<TracePoint> trace;
  std::vector<std::string> warnings;
};

inline const char* kCsvHeader = "instance,alpha,scheme,sp,cell,class,rate,utility,welfare,nash_welfare,poa,converged,iterations";

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string csv_line(const ResultRow& r) {
  return std::to_string(r.instance) + "," + alpha_label(r.alpha) + "," + scheme_name(r.scheme) + "," +
         csv_field(r.sp) + "," + csv_field(r.cell) + "," + csv_field(r.cls) + "," + csv_number(r.rate) + "," +
         csv_number(r.utility) + "," + csv_number(r.welfare) + "," + csv_number(r.nash_welfare) + "," +
         csv_number(r.poa) + "," + (r.converged ? "1" : "0") + "," + std::to_string(r.iterations);
}

namespace experiment_detail {

struct Outcome {
  bool ok = false;
  SolveReport report;
  std::string error;
};

inline Outcome attempt(Scheme scheme, const Market& market, const SolverConfig& solver) {
  Outcome o;
  try {
    switch (scheme) {
      case Scheme::me: o.report = solve_eg(market, solver); break;
      case Scheme::so: o.report = solve_social_optimal(market); break;
      case Scheme::ss: o.report = static_share(market); break;
    }
    o.ok = true;
  } catch (const Error& e) {
    o.error = e.what();
  }
  return o;
}

inline void append_rows(std::vector<ResultRow>& out, std::size_t instance, double alpha, Scheme scheme,
                        const Market& market, const Outcome& o, double poa) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SchemeOutcome summary;
  if (o.ok) summary = summarize(o.report, market);
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    const auto& p = market.providers[s];
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
      ResultRow r;
      r.instance = instance;
      r.alpha = alpha;
      r.scheme = scheme;
      r.sp = p.name;
      r.cell = market.cell_ids[p.groups[g].cell];
      r.cls = market.class_names[p.groups[g].cls];
      r.rate = o.ok ? o.report.allocation.rate[s][g] / p.groups[g].users : nan;
      r.utility = o.ok ? summary.utilities[s] : nan;
      r.welfare = o.ok ? summary.welfare : nan;
      r.nash_welfare = o.ok ? summary.nash_welfare : nan;
      r.poa = poa;
      r.converged = o.ok && o.report.converged;
      r.iterations = o.ok ? o.report.iterations : 0;
      out.push_back(std::move(r));
    }
  }
}

inline std::size_t resolve_provider(const ScenarioSpec& spec, const std::string& key) {
  for (std::size_t s = 0; s < spec.sps.size(); ++s)
    if (spec.sps[s].name == key) return s;
  if (!key.empty() && std::all_of(key.begin(), key.end(), [](unsigned char c) { return std::isdigit(c); })) {
    const auto idx = static_cast<std::size_t>(std::stoull(key));
    if (idx < spec.sps.size()) return idx;
  }
  throw UsageError("$.budget_sweep.provider", "no provider '" + key + "'");
}

struct InstanceResult {
  std::vector<ResultRow> rows;
  std::vector<SweepRow> sweep;
};

inline InstanceResult run_instance(const ExperimentConfig& config, const ScenarioSpec& spec, std::size_t index) {
  InstanceResult out;
  const auto has = [&](Scheme s) { return std::find(config.schemes.begin(), config.schemes.end(), s) != config.schemes.end(); };
  for (double alpha : config.alphas) {
    const Market market = normalize_scenario(set_alpha(spec, alpha));
    std::map<Scheme, Outcome> results;
    for (Scheme s : config.schemes) results[s] = attempt(s, market, config.solver);
    double poa = std::numeric_limits<double>::quiet_NaN();
    if (has(Scheme::me) && has(Scheme::so) && results[Scheme::me].ok && results[Scheme::so].ok) {
      const auto b = detail::budgets(market);
      const double w_so = utilitarian_welfare(results[Scheme::so].report.utilities, b);
      const double w_me = utilitarian_welfare(results[Scheme::me].report.utilities, b);
      if (w_so > 0.0) poa = (w_so - w_me) / w_so;
    }
    for (Scheme s : config.schemes) append_rows(out.rows, index, alpha, s, market, results[s], poa);
  }
  if (config.budget_sweep.enabled && has(Scheme::me)) {
    const std::size_t sp = resolve_provider(spec, config.budget_sweep.provider);
    const auto variants = budget_sweep(spec, sp, config.budget_sweep.fractions);
    for (std::size_t f = 0; f < variants.size(); ++f)
      for (double alpha : config.budget_sweep.alphas) {
        const Market market = normalize_scenario(set_alpha(variants[f], alpha));
        std::vector<ResultRow> rows;
        append_rows(rows, index, alpha, Scheme::me, market, attempt(Scheme::me, market, config.solver),
                    std::numeric_limits<double>::quiet_NaN());
        for (auto& r : rows) out.sweep.push_back(SweepRow{config.budget_sweep.fractions[f], std::move(r)});
      }
  }
  return out;
}

}  // namespace experiment_detail

inline ScenarioSpec experiment_template(const ExperimentConfig& config) {
  return config.scenario == "preset" ? paper_preset() : load_scenario(config.scenario);
}

/// Instance `index` of the batch: the template with freshly drawn loads (when enabled).
inline ScenarioSpec experiment_instance(const ExperimentConfig& config, const ScenarioSpec& tmpl, std::size_t index) {
  if (!config.resample_loads) return tmpl;
  LoadModel load = config.load;
  load.seed = config.seed;
  return generate_instance(tmpl, load, index);
}

/// Solves every instance x alpha x scheme, the budget sweep and the price trace.
/// Instances run on `jobs` threads and are merged by index, so the output does
/// not depend on the thread count.
inline ResultSet run_experiment(const ExperimentConfig& config) {
  config.validate();
  const ScenarioSpec tmpl = experiment_template(config);
  std::vector<experiment_detail::InstanceResult> slots(config.instances);
  std::vector<std::string> failures(config.instances);
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t i = next++; i < config.instances; i = next++) {
      try {
        slots[i] = experiment_detail::run_instance(config, experiment_instance(config, tmpl, i), i);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const std::size_t threads = std::min(config.jobs, config.instances);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& f : failures)
    if (!f.empty()) throw Error(f);

  ResultSet out;
  for (auto& s : slots) {
    out.rows.insert(out.rows.end(), std::make_move_iterator(s.rows.begin()), std::make_move_iterator(s.rows.end()));
    out.sweep.insert(out.sweep.end(), std::make_move_iterator(s.sweep.begin()), std::make_move_iterator(s.sweep.end()));
  }

  if (config.trace.enabled) {
    const Market market = normalize_scenario(set_alpha(experiment_instance(config, tmpl, 0), config.trace.alpha));
    DynamicsConfig dyn;
    dyn.max_iterations = config.trace.iterations;
    dyn.tolerance = std::numeric_limits<double>::min();
    const auto report = run_dynamics(market, dyn);
    for (std::size_t k = 0; k < report.trace_iterations.size(); ++k)
      for (std::size_t j = 0; j < market.resource_count(); ++j) {
        const auto& r = market.resources[j];
        if (!config.trace.cell.empty() && market.cell_ids[r.cell] != config.trace.cell) continue;
        out.trace.push_back({report.trace_iterations[k], market.cell_ids[r.cell], r.name, report.price_trace[k][j]});
      }
    if (out.trace.empty()) out.warnings.push_back("trace cell '" + config.trace.cell + "' not found");
  }
  for (const auto& r : out.rows)
    if (!r.converged) {
      out.warnings.push_back("some solves did not converge; see the converged column");
      break;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregates
// ---------------------------------------------------------------------------

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  m.count = v.size();
  if (v.empty()) return m;
  double sum = 0.0;
  for (double x : v) sum += x;
  m.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

struct RateSummary {
  double alpha;
  std::string sp, cls;
  MeanStd rate;  // over instances and cells
};

/// Mean per-user rate per (alpha, provider, class) for one scheme.
inline std::vector<RateSummary> rate_summary(const std::vector<ResultRow>& rows, Scheme scheme) {
  std::map<std::tuple<double, std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : rows)
    if (r.scheme == scheme && std::isfinite(r.rate)) groups[{r.alpha, r.sp, r.cls}].push_back(r.rate);
  std::vector<RateSummary> out;
  for (const auto& [key, v] : groups) out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), mean_std(v)});
  return out;
}

struct ClassGap {
  double alpha;
  std::string sp;
  MeanStd gap;  // over instances
};

/// Per instance, each class's per-user rate averaged over cells; the gap is the
/// spread (max - min) across the provider's classes, then averaged over instances.
inline std::vector<ClassGap> class_gaps(const std::vector<ResultRow>& rows, Scheme scheme) {
  std::map<std::tuple<double, std::string, std::size_t, std::string>, std::vector<double>> per_class;
  for (const auto& r : rows)
    if (r.scheme == scheme && std::isfinite(r.rate)) per_class[{r.alpha, r.sp, r.instance, r.cls}].push_back(r.rate);
  std::map<std::tuple<double, std::string, std::size_t>, std::pair<double, double>> spread;
  for (const auto& [key, v] : per_class) {
    const double m = mean_std(v).mean;
    auto [it, fresh] = spread.try_emplace({std::get<0>(key), std::get<1>(key), std::get<2>(key)}, m, m);
    if (!fresh) {
      it->second.first = std::min(it->second.first, m);
      it->second.second = std::max(it->second.second, m);
    }
  }
  std::map<std::pair<double, std::string>, std::vector<double>> gaps;
  for (const auto& [key, mm] : spread) gaps[{std::get<0>(key), std::get<1>(key)}].push_back(mm.second - mm.first);
  std::vector<ClassGap> out;
  for (const auto& [key, v] : gaps) out.push_back({key.first, key.second, mean_std(v)});
  return out;
}

struct WelfareSummary {
  double alpha;
  Scheme scheme;
  MeanStd welfare, nash_welfare, poa;
  std::size_t unconverged = 0;
};

/// Welfare per (alpha, scheme), one sample per instance.
inline std::vector<WelfareSummary> welfare_summary(const std::vector<ResultRow>& rows) {
  struct Acc {
    std::vector<double> w, n, p;
    std::size_t bad = 0;
  };
  std::map<std::pair<double, int>, Acc> acc;
  std::map<std::tuple<double, int, std::size_t>, bool> seen;
  for (const auto& r : rows) {
    auto& a = acc[{r.alpha, static_cast<int>(r.scheme)}];
    if (!r.converged) ++a.bad;
    if (!seen.try_emplace({r.alpha, static_cast<int>(r.scheme), r.instance}, true).second) continue;
    if (std::isfinite(r.welfare)) a.w.push_back(r.welfare);
    if (std::isfinite(r.nash_welfare)) a.n.push_back(r.nash_welfare);
    if (std::isfinite(r.poa)) a.p.push_back(r.poa);
  }
  std::vector<WelfareSummary> out;
  for (const auto& [key, a] : acc)
    out.push_back({key.first, static_cast<Scheme>(key.second), mean_std(a.w), mean_std(a.n), mean_std(a.p), a.bad});
  return out;
}

struct SensitivitySummary {
  double alpha, fraction;
  std::string sp;
  MeanStd rate;  // over instances of the provider's mean per-user rate
};

inline std::vector<SensitivitySummary> sensitivity_summary(const std::vector<SweepRow>& rows) {
  std::map<std::tuple<double, double, std::string, std::size_t>, std::vector<double>> per_instance;
  for (const auto& s : rows)
    if (std::isfinite(s.row.rate)) per_instance[{s.row.alpha, s.fraction, s.row.sp, s.row.instance}].push_back(s.row.rate);
  std::map<std::tuple<double, double, std::string>, std::vector<double>> groups;
  for (const auto& [key, v] : per_instance)
    groups[{std::get<0>(key), std::get<1>(key), std::get<2>(key)}].push_back(mean_std(v).mean);
  std::vector<SensitivitySummary> out;
  for (const auto& [key, v] : groups) out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), mean_std(v)});
  return out;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

inline std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) out += csv_line(r) + "\n";
  return out;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string("budget_fraction,") + kCsvHeader + "\n";
  for (const auto& s : rows) out += csv_number(s.fraction) + "," + csv_line(s.row) + "\n";
  return out;
}

inline std::string trace_csv(const std::vector<TracePoint>& trace) {
  std::string out = "iteration,cell,resource,price\n";
  for (const auto& t : trace)
    out += std::to_string(t.iteration) + "," + csv_field(t.cell) + "," + csv_field(t.resource) + "," +
           csv_number(t.price) + "\n";
  return out;
}

/// Long-format result tables: results.csv and, when present, budget_sweep.csv.
inline void emit_csv(const ResultSet& results, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/results.csv", results_csv(results.rows));
  if (!results.sweep.empty()) write_text_file(dir + "/budget_sweep.csv", sweep_csv(results.sweep));
}

/// Per-study aggregate tables plus one SVG chart each, under dir/plots.
inline void emit_plotdata(const ResultSet& results, const std::string& dir) {
  const std::string plots = dir + "/plots";
  std::filesystem::create_directories(plots);

  // Alpha effect: per-class mean rate under ME, and the inter-class gap.
  {
    std::string csv = "alpha,sp,class,mean_rate,std_rate,samples\n";
    std::map<std::string, svg::Series> lines;
    for (const auto& s : rate_summary(results.rows, Scheme::me)) {
      csv += alpha_label(s.alpha) + "," + csv_field(s.sp) + "," + csv_field(s.cls) + "," + csv_number(s.rate.mean) +
             "," + csv_number(s.rate.stddev) + "," + std::to_string(s.rate.count) + "\n";
      if (!std::isfinite(s.alpha)) continue;
      auto& line = lines[s.sp + " " + s.cls];
      line.label = s.sp + " " + s.cls;
      line.x.push_back(s.alpha);
      line.y.push_back(s.rate.mean);
      line.lo.push_back(s.rate.mean - s.rate.stddev);
      line.hi.push_back(s.rate.mean + s.rate.stddev);
    }
    write_text_file(plots + "/alpha_effect.csv", csv);
    std::string gaps = "alpha,sp,mean_gap,std_gap,instances\n";
    for (const auto& g : class_gaps(results.rows, Scheme::me))
      gaps += alpha_label(g.alpha) + "," + csv_field(g.sp) + "," + csv_number(g.gap.mean) + "," +
              csv_number(g.gap.stddev) + "," + std::to_string(g.gap.count) + "\n";
    write_text_file(plots + "/class_gap.csv", gaps);
    svg::Chart chart{"Average user rate per class under ME", "alpha", "rate per user", {}, false};
    for (auto& [k, s] : lines) chart.series.push_back(std::move(s));
    write_text_file(plots + "/alpha_effect.svg", svg::render(chart));
  }

  // Welfare per scheme.
  {
    std::string csv = "alpha,scheme,mean_welfare,std_welfare,mean_nash_welfare,mean_poa,instances,unconverged_rows\n";
    std::map<Scheme, svg::Series> lines;
    for (const auto& w : welfare_summary(results.rows)) {
      csv += alpha_label(w.alpha) + "," + scheme_name(w.scheme) + "," + csv_number(w.welfare.mean) + "," +
             csv_number(w.welfare.stddev) + "," + csv_number(w.nash_welfare.mean) + "," +
             csv_number(w.poa.count ? w.poa.mean : std::numeric_limits<double>::quiet_NaN()) + "," +
             std::to_string(w.welfare.count) + "," + std::to_string(w.unconverged) + "\n";
      if (!std::isfinite(w.alpha) || !(w.welfare.mean > 0.0)) continue;
      auto& line = lines[w.scheme];
      line.label = scheme_name(w.scheme);
      line.x.push_back(w.alpha);
      line.y.push_back(w.welfare.mean);
      line.lo.push_back(std::max(w.welfare.mean - w.welfare.stddev, w.welfare.mean * 1e-3));
      line.hi.push_back(w.welfare.mean + w.welfare.stddev);
    }
    write_text_file(plots + "/welfare.csv", csv);
    svg::Chart chart{"Social welfare by scheme", "alpha", "sum B U", {}, true};
    for (auto& [k, s] : lines) chart.series.push_back(std::move(s));
    write_text_file(plots + "/welfare.svg", svg::render(chart));
  }

  // Budget sensitivity.
  if (!results.sweep.empty()) {
    std::string csv = "alpha,budget_fraction,sp,mean_rate,std_rate,instances\n";
    std::map<std::string, svg::Series> lines;
    for (const auto& s : sensitivity_summary(results.sweep)) {
      csv += alpha_label(s.alpha) + "," + csv_number(s.fraction) + "," + csv_field(s.sp) + "," +
             csv_number(s.rate.mean) + "," + csv_number(s.rate.stddev) + "," + std::to_string(s.rate.count) + "\n";
      const std::string key = s.sp + " alpha=" + alpha_label(s.alpha);
      auto& line = lines[key];
      line.label = key;
      line.x.push_back(s.fraction);
      line.y.push_back(s.rate.mean);
    }
    write_text_file(plots + "/sensitivity.csv", csv);
    svg::Chart chart{"Average user rate vs budget share", "budget fraction", "rate per user", {}, false};
    for (auto& [k, s] : lines) chart.series.push_back(std::move(s));
    write_text_file(plots + "/sensitivity.svg", svg::render(chart));
  }

  // Price convergence trace.
  if (!results.trace.empty()) {
    write_text_file(plots + "/price_trace.csv", trace_csv(results.trace));
    std::map<std::string, svg::Series> lines;
    for (const auto& t : results.trace) {
      const std::string key = "cell " + t.cell + " " + t.resource;
      auto& line = lines[key];
      line.label = key;
      line.x.push_back(static_cast<double>(t.iteration));
      line.y.push_back(t.price);
    }
    svg::Chart chart{"Trading-Post price trace", "iteration", "price", {}, false};
    for (auto& [k, s] : lines) chart.series.push_back(std::move(s));
    write_text_file(plots + "/price_trace.svg", svg::render(chart));
  }
}

}  // namespace fishermarket
