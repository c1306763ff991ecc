#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fishermarket/fishermarket.hpp"

using namespace fishermarket;

namespace {

std::vector<double> parse_alpha_list(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& item : items) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const auto end = std::min(item.find(',', start), item.size());
      const auto token = item.substr(start, end - start);
      start = end + 1;
      if (token.empty()) continue;
      if (token == "inf") {
        out.push_back(kInfiniteAlpha);
        continue;
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || !(v >= 0.0)) throw UsageError("--alpha", "bad value '" + token + "'");
      out.push_back(v);
    }
  }
  return out;
}

// Shared scenario selection for the single-instance commands.
struct ScenarioArgs {
  std::string config;  // scenario JSON; empty selects the built-in preset
  std::uint64_t seed = 1;
  std::size_t instance = 0;
  std::vector<std::string> alpha;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "scenario JSON (default: built-in 7-cell preset)");
    app->add_option("--seed", seed, "load-model seed for the preset");
    app->add_option("--instance", instance, "preset instance index");
    app->add_option("--alpha", alpha, "alpha for every provider (number or inf)")->delimiter(',');
  }

  ScenarioSpec load() const {
    if (!config.empty()) return load_scenario(config);
    LoadModel lm;
    lm.seed = seed;
    return generate_instance(paper_preset(), lm, instance);
  }

  // One scenario per requested alpha, or the file's own alphas when none given.
  std::vector<ScenarioSpec> variants() const {
    const ScenarioSpec base = load();
    const auto alphas = parse_alpha_list(alpha);
    if (alphas.empty()) return {base};
    std::vector<ScenarioSpec> out;
    for (double a : alphas) out.push_back(set_alpha(base, a));
    return out;
  }
};

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  const auto parent = std::filesystem::path(out).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  write_text_file(out, text);
}

Json welfare_to_json(const WelfareReport& r, const Market& market) {
  const auto outcome = [&](const SchemeOutcome& o) {
    Json j{{"welfare", o.welfare}, {"nash_welfare", o.nash_welfare}, {"converged", o.converged},
           {"iterations", o.iterations}, {"utilities", Json::object()}};
    for (std::size_t s = 0; s < o.utilities.size(); ++s) j["utilities"][market.providers[s].name] = o.utilities[s];
    return j;
  };
  Json j{{"alpha", alpha_to_json(r.alpha)}, {"ME", outcome(r.me)}, {"SO", outcome(r.so)}, {"SS", outcome(r.ss)}};
  j["max_utilities"] = r.max_utilities;
  j["poa"] = r.poa_value;
  j["poa_bound"] = r.poa_bound;
  j["poa_within_bound"] = r.poa_within_bound;
  j["me_minus_ss"] = r.me_minus_ss;
  j["me_dominates_ss"] = r.me_dominates_ss;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher-market equilibria for multi-cell network slicing"};
  app.require_subcommand(1);

  // solve
  ScenarioArgs solve_args;
  std::string solve_scheme = "me", solve_out, solve_method = "auto";
  double solve_tol = SolverConfig{}.tolerance;
  auto* solve = app.add_subcommand("solve", "solve one instance under one scheme; prints a JSON report");
  solve_args.attach(solve);
  solve->add_option("--scheme", solve_scheme, "me | so | ss");
  solve->add_option("--method", solve_method, "ME method: auto | dynamics | tatonnement | dual-subgradient | interior-point");
  solve->add_option("--tolerance", solve_tol, "equilibrium residual tolerance");
  solve->add_option("--out", solve_out, "output file (default stdout)");

  // dynamics
  ScenarioArgs dyn_args;
  std::string dyn_out;
  DynamicsConfig dyn_config;
  auto* dynamics = app.add_subcommand("dynamics", "run Trading-Post bid dynamics and write the price trace");
  dyn_args.attach(dynamics);
  dynamics->add_option("--iterations", dyn_config.max_iterations, "maximum rounds");
  dynamics->add_option("--tolerance", dyn_config.tolerance, "stop when the relative price change falls below this");
  dynamics->add_option("--stride", dyn_config.trace_stride, "trace every k-th round");
  dynamics->add_option("--out", dyn_out, "output directory for trace.csv and report.json (default: trace to stdout)");

  // experiment
  std::string exp_config_path, exp_out, exp_scheme;
  std::optional<std::uint64_t> exp_seed;
  std::optional<std::size_t> exp_instances, exp_jobs;
  std::vector<std::string> exp_alpha;
  bool full_scale = false;
  auto* experiment = app.add_subcommand("experiment", "batch experiment: alpha sweep, schemes, budget sweep, trace");
  experiment->add_option("--config", exp_config_path, "experiment config JSON");
  experiment->add_option("--seed", exp_seed, "master seed");
  experiment->add_option("--out", exp_out, "output directory");
  experiment->add_option("--scheme", exp_scheme, "restrict to one scheme: me | so | ss");
  experiment->add_option("--alpha", exp_alpha, "alpha list, e.g. 0,1,2,inf")->delimiter(',');
  experiment->add_option("--instances", exp_instances, "number of instances");
  experiment->add_option("--jobs", exp_jobs, "worker threads");
  experiment->add_flag("--full-paper-scale", full_scale, "run 2000 instances");

  // compare
  ScenarioArgs cmp_args;
  std::string cmp_out;
  auto* compare = app.add_subcommand("compare", "ME vs SO vs SS on one instance with PoA and dominance checks");
  cmp_args.attach(compare);
  compare->add_option("--out", cmp_out, "output file (default stdout)");

  // gen
  std::string gen_config, gen_out;
  std::uint64_t gen_seed = 1;
  std::size_t gen_instances = 1;
  std::vector<std::string> gen_alpha;
  auto* gen = app.add_subcommand("gen", "write randomized scenario JSON files");
  gen->add_option("--config", gen_config, "template scenario JSON (default: preset)");
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--instances", gen_instances, "number of scenarios");
  gen->add_option("--alpha", gen_alpha, "alpha for every provider")->delimiter(',');
  gen->add_option("--out", gen_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*solve) {
      const auto scheme = parse_scheme(solve_scheme);
      if (!scheme) throw UsageError("--scheme", "expected me, so or ss");
      SolverConfig config;
      config.tolerance = solve_tol;
      Json doc = Json::object();
      doc["method"] = solve_method;
      config.method = experiment_config_from_json(Json{{"solver", doc}}).solver.method;
      Json out = Json::array();
      for (const auto& spec : solve_args.variants()) {
        const Market market = normalize_scenario(spec);
        SolveReport report;
        switch (*scheme) {
          case Scheme::me: report = solve_eg(market, config); break;
          case Scheme::so: report = solve_social_optimal(market, config); break;
          case Scheme::ss: report = static_share(market); break;
        }
        Json j = report_to_json(report, market);
        j["scheme"] = scheme_name(*scheme);
        out.push_back(std::move(j));
      }
      emit(solve_out, (out.size() == 1 ? out[0] : out).dump(2) + "\n");
      return 0;
    }
    if (*dynamics) {
      const auto variants = dyn_args.variants();
      if (variants.size() != 1) throw UsageError("--alpha", "dynamics takes a single alpha");
      const Market market = normalize_scenario(variants.front());
      const auto report = run_dynamics(market, dyn_config);
      std::vector<TracePoint> trace;
      for (std::size_t k = 0; k < report.trace_iterations.size(); ++k)
        for (std::size_t j = 0; j < market.resource_count(); ++j) {
          const auto& r = market.resources[j];
          trace.push_back({report.trace_iterations[k], market.cell_ids[r.cell], r.name, report.price_trace[k][j]});
        }
      if (dyn_out.empty()) {
        std::cout << trace_csv(trace);
      } else {
        std::filesystem::create_directories(dyn_out);
        write_text_file(dyn_out + "/trace.csv", trace_csv(trace));
        std::string potential = "iteration,potential\n";
        for (std::size_t k = 0; k < report.potential_trace.size(); ++k)
          potential += std::to_string(report.trace_iterations[k]) + "," + csv_number(report.potential_trace[k]) + "\n";
        write_text_file(dyn_out + "/potential.csv", potential);
        write_text_file(dyn_out + "/report.json", report_to_json(report, market).dump(2) + "\n");
      }
      std::cerr << (report.converged ? "converged" : "NOT converged") << " after " << report.iterations
                << " rounds\n";
      return report.converged ? 0 : 3;
    }
    if (*experiment) {
      ExperimentConfig config;
      if (!exp_config_path.empty()) config = experiment_config_from_json(read_json_file(exp_config_path));
      if (exp_seed) config.seed = *exp_seed;
      if (!exp_out.empty()) config.out = exp_out;
      if (!exp_scheme.empty()) {
        const auto s = parse_scheme(exp_scheme);
        if (!s) throw UsageError("--scheme", "expected me, so or ss");
        config.schemes = {*s};
      }
      if (!exp_alpha.empty()) config.alphas = parse_alpha_list(exp_alpha);
      if (full_scale) config.instances = kPaperScaleInstances;
      if (exp_instances) config.instances = *exp_instances;
      if (exp_jobs) config.jobs = *exp_jobs;
      config.validate();
      const auto results = run_experiment(config);
      emit_csv(results, config.out);
      emit_plotdata(results, config.out);
      for (const auto& w : results.warnings) std::cerr << "warning: " << w << "\n";
      std::cerr << results.rows.size() << " rows written to " << config.out << "/results.csv\n";
      return 0;
    }
    if (*compare) {
      Json out = Json::array();
      for (const auto& spec : cmp_args.variants()) {
        const Market market = normalize_scenario(spec);
        out.push_back(welfare_to_json(compare_schemes(market), market));
      }
      emit(cmp_out, out.dump(2) + "\n");
      return 0;
    }
    if (*gen) {
      const ScenarioSpec tmpl = gen_config.empty() ? paper_preset() : load_scenario(gen_config);
      const auto alphas = parse_alpha_list(gen_alpha);
      if (alphas.size() > 1) throw UsageError("--alpha", "gen takes a single alpha");
      LoadModel lm;
      lm.seed = gen_seed;
      std::filesystem::create_directories(gen_out);
      for (std::size_t i = 0; i < gen_instances; ++i) {
        ScenarioSpec spec = generate_instance(tmpl, lm, i);
        if (!alphas.empty()) spec = set_alpha(spec, alphas.front());
        char name[32];
        std::snprintf(name, sizeof name, "/instance_%04zu.json", i);
        write_text_file(gen_out + name, scenario_to_json(spec).dump(2) + "\n");
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
