#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace fishermarket;
using namespace fm_test;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.instances = 3;
  c.alphas = {1.0, 2.0};
  c.budget_sweep.fractions = {0.2, 0.6};
  c.budget_sweep.alphas = {1.0};
  c.trace.iterations = 20;
  return c;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fishermarket_test_" + name);
  std::filesystem::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST(Experiment, EmptyResultSetGivesHeaderOnlyCsv) {
  EXPECT_EQ(results_csv({}), std::string(kCsvHeader) + "\n");
  const auto dir = temp_dir("empty");
  emit_csv(ResultSet{}, dir);
  const auto rows = read_csv(dir + "/results.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].size(), 13u);
  EXPECT_EQ(rows[0][0], "instance");
  EXPECT_EQ(rows[0][12], "iterations");
}

TEST(Experiment, SingleStaticShareInstance) {
  ExperimentConfig c;
  c.instances = 1;
  c.schemes = {Scheme::ss};
  c.alphas = {1.0};
  c.budget_sweep.enabled = false;
  c.trace.enabled = false;
  const auto res = run_experiment(c);
  ASSERT_EQ(res.rows.size(), 3u * 7u * 2u);
  const auto m = normalize_scenario(set_alpha(experiment_instance(c, paper_preset(), 0), 1.0));
  const auto ss = static_share(m);
  std::size_t k = 0;
  for (std::size_t s = 0; s < m.provider_count(); ++s)
    for (std::size_t g = 0; g < m.providers[s].groups.size(); ++g, ++k) {
      const auto& row = res.rows[k];
      EXPECT_EQ(row.scheme, Scheme::ss);
      EXPECT_EQ(row.sp, m.providers[s].name);
      EXPECT_DOUBLE_EQ(row.rate, ss.allocation.rate[s][g] / m.providers[s].groups[g].users);
      EXPECT_TRUE(row.converged);
      EXPECT_TRUE(std::isnan(row.poa));
    }
}

TEST(Experiment, PriceTraceSchema) {
  auto c = small_config();
  c.instances = 1;
  c.schemes = {Scheme::ss};
  c.budget_sweep.enabled = false;
  const auto res = run_experiment(c);
  ASSERT_EQ(res.trace.size(), 21u * 3u);
  for (const auto& t : res.trace) EXPECT_EQ(t.cell, "2");
  const auto csv = trace_csv(res.trace);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,cell,resource,price");
}

TEST(Experiment, DeterministicAcrossThreadCounts) {
  auto c = small_config();
  c.jobs = 1;
  const auto a = run_experiment(c);
  c.jobs = 8;
  const auto b = run_experiment(c);
  EXPECT_EQ(results_csv(a.rows), results_csv(b.rows));
  EXPECT_EQ(sweep_csv(a.sweep), sweep_csv(b.sweep));
  EXPECT_EQ(trace_csv(a.trace), trace_csv(b.trace));
}

TEST(Experiment, WelfareAggregatesMatchExternalReaggregation) {
  auto c = small_config();
  const auto res = run_experiment(c);
  const auto dir = temp_dir("welfare");
  emit_csv(res, dir);
  emit_plotdata(res, dir);
  for (const char* f : {"alpha_effect.csv", "class_gap.csv", "welfare.csv", "sensitivity.csv", "price_trace.csv",
                        "alpha_effect.svg", "welfare.svg", "sensitivity.svg", "price_trace.svg"})
    EXPECT_TRUE(std::filesystem::exists(dir + "/plots/" + f)) << f;

  // One welfare value per (alpha, scheme, instance), averaged by hand.
  const auto rows = read_csv(dir + "/results.csv");
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> per_instance;
  for (std::size_t i = 1; i < rows.size(); ++i) per_instance[{rows[i][1], rows[i][2]}][rows[i][0]] = std::stod(rows[i][8]);
  const auto summary = read_csv(dir + "/plots/welfare.csv");
  ASSERT_EQ(summary.size(), per_instance.size() + 1);
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& values = per_instance.at({summary[i][0], summary[i][1]});
    double mean = 0.0;
    for (const auto& [inst, w] : values) mean += w;
    mean /= static_cast<double>(values.size());
    EXPECT_NEAR(std::stod(summary[i][2]), mean, 1e-9 * std::max(1.0, std::abs(mean)));
  }
}

TEST(Experiment, FailedSolvesAreFlaggedNotDropped) {
  auto c = small_config();
  c.instances = 1;
  c.schemes = {Scheme::me};
  c.alphas = {0.5};
  c.budget_sweep.enabled = false;
  c.trace.enabled = false;
  c.solver.method = SolverMethod::tatonnement;
  c.solver.max_iterations = 5;
  const auto res = run_experiment(c);
  ASSERT_EQ(res.rows.size(), 42u);
  for (const auto& r : res.rows) EXPECT_FALSE(r.converged);
  EXPECT_FALSE(res.warnings.empty());
}

TEST(Experiment, MeRowsAreConsistentWithResiduals) {
  auto c = small_config();
  c.alphas = {0.5, 1.0, kInfiniteAlpha};
  c.schemes = {Scheme::me};
  const auto res = run_experiment(c);
  for (const auto& r : res.rows) {
    if (!r.converged) continue;
    const auto m = normalize_scenario(set_alpha(experiment_instance(c, paper_preset(), r.instance), r.alpha));
    const auto rep = solve_eg(m, c.solver);
    EXPECT_TRUE(rep.residuals->holds(c.solver.tolerance));
  }
}

TEST(Experiment, CsvFormatting) {
  ResultRow r;
  r.alpha = kInfiniteAlpha;
  r.sp = "a,b";
  r.rate = 0.1;
  const auto line = csv_line(r);
  EXPECT_NE(line.find(",inf,ME,\"a,b\","), std::string::npos);
  EXPECT_NE(line.find("0.10000000000000001"), std::string::npos);
}

TEST(ExperimentConfigJson, ParsesAndReportsPaths) {
  const auto c = experiment_config_from_json(Json::parse(R"({
    "alphas": [1, "inf"], "instances": 7, "schemes": ["me", "SS"], "jobs": 2, "seed": 9,
    "load": {"variance": 50, "spread": "stddev"},
    "budget_sweep": {"provider": "SP2", "fractions": [0.5], "alphas": [2]},
    "trace": false, "solver": {"method": "interior-point", "tolerance": 1e-8}})"));
  EXPECT_EQ(c.instances, 7u);
  EXPECT_TRUE(is_max_min(c.alphas[1]));
  EXPECT_EQ(c.schemes.size(), 2u);
  EXPECT_EQ(c.load.spread, LoadModel::Spread::stddev);
  EXPECT_FALSE(c.trace.enabled);
  EXPECT_EQ(c.solver.method, SolverMethod::interior_point);

  const auto path_of = [](const char* text) {
    try {
      experiment_config_from_json(Json::parse(text));
    } catch (const UsageError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(path_of(R"({"alphas": [1, -2]})"), "$.alphas[1]");
  EXPECT_EQ(path_of(R"({"schemes": []})"), "$.schemes");
  EXPECT_EQ(path_of(R"({"schemes": ["XX"]})"), "$.schemes[0]");
  EXPECT_EQ(path_of(R"({"budget_sweep": {"fractions": [0.5, 1.5]}})"), "$.budget_sweep.fractions[1]");
  EXPECT_EQ(path_of(R"({"instancez": 3})"), "$.instancez");
  EXPECT_EQ(path_of(R"({"solver": {"method": "newton"}})"), "$.solver.method");
  EXPECT_EQ(path_of(R"({"instances": 0})"), "$.instances");
}

TEST(Experiment, GapAggregationOracle) {
  std::vector<ResultRow> rows;
  const auto add = [&](std::size_t inst, const std::string& cell, const std::string& cls, double rate) {
    ResultRow r;
    r.instance = inst;
    r.alpha = 1.0;
    r.sp = "S";
    r.cell = cell;
    r.cls = cls;
    r.rate = rate;
    rows.push_back(r);
  };
  add(0, "1", "a", 1.0), add(0, "2", "a", 3.0), add(0, "1", "b", 5.0), add(0, "2", "b", 5.0);
  add(1, "1", "a", 2.0), add(1, "1", "b", 1.0);
  const auto gaps = class_gaps(rows, Scheme::me);
  ASSERT_EQ(gaps.size(), 1u);
  EXPECT_DOUBLE_EQ(gaps[0].gap.mean, (3.0 + 1.0) / 2.0);
}
