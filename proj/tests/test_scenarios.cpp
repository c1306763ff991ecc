#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace fishermarket;
using namespace fm_test;

TEST(Preset, Shape) {
  const auto spec = paper_preset();
  ASSERT_EQ(spec.cells.size(), 7u);
  for (const auto& c : spec.cells) {
    ASSERT_EQ(c.resources.size(), 3u);
    EXPECT_EQ(c.resources[0].capacity, 30.0);
    EXPECT_EQ(c.resources[1].capacity, 126.0);
    EXPECT_EQ(c.resources[2].capacity, 40.0);
  }
  const auto& balanced = spec.classes[3];
  EXPECT_EQ(balanced.name, "Balanced");
  EXPECT_EQ(balanced.demand.at("CPU"), 5.0);
  EXPECT_EQ(balanced.demand.at("RAM"), 40.0);
  EXPECT_EQ(balanced.demand.at("BW"), 5.0);
  for (const auto& sp : spec.sps) {
    EXPECT_DOUBLE_EQ(sp.budget, 1.0 / 3.0);
    std::set<std::string> classes;
    for (const auto& s : sp.support) classes.insert(s.cls);
    EXPECT_EQ(classes.size(), 2u);
    EXPECT_TRUE(classes.count("Balanced"));
  }
  EXPECT_NO_THROW(normalize_scenario(spec));
}

TEST(GenerateInstances, DegenerateVarianceGivesMean) {
  LoadModel lm;
  lm.variance = 0.0;
  for (const auto& spec : generate_instances(paper_preset(), lm, 3))
    for (const auto& sp : spec.sps)
      for (const auto& s : sp.support) EXPECT_EQ(s.users, 100u);
}

TEST(GenerateInstances, SeedDeterminismAndOrderIndependence) {
  LoadModel lm;
  lm.seed = 77;
  const auto a = generate_instances(paper_preset(), lm, 5), b = generate_instances(paper_preset(), lm, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(scenario_to_json(a[i]), scenario_to_json(b[i]));
    EXPECT_EQ(scenario_to_json(a[i]), scenario_to_json(generate_instance(paper_preset(), lm, i)));
  }
  lm.seed = 78;
  EXPECT_NE(scenario_to_json(a[0]), scenario_to_json(generate_instance(paper_preset(), lm, 0)));
}

TEST(GenerateInstances, SampleMeanAndSpread) {
  LoadModel lm;
  const auto specs = generate_instances(paper_preset(), lm, 2000);
  double sum = 0.0, sq = 0.0, n = 0.0;
  for (const auto& spec : specs) {
    EXPECT_NO_THROW(validate_scenario(spec));
    for (const auto& sp : spec.sps)
      for (const auto& s : sp.support) {
        sum += static_cast<double>(s.users);
        sq += static_cast<double>(s.users) * static_cast<double>(s.users);
        n += 1.0;
      }
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  EXPECT_GE(mean, 98.0);
  EXPECT_LE(mean, 102.0);
  // Rounding adds about 1/12 to the variance.
  EXPECT_NEAR(var, 50.0 + 1.0 / 12.0, 2.0);
}

TEST(GenerateInstances, StddevReadingAndFloor) {
  LoadModel lm;
  lm.spread = LoadModel::Spread::stddev;
  lm.variance = 50.0;
  std::uint64_t smallest = 1000;
  for (const auto& spec : generate_instances(paper_preset(), lm, 200))
    for (const auto& sp : spec.sps)
      for (const auto& s : sp.support) smallest = std::min(smallest, s.users);
  EXPECT_EQ(smallest, 1u);
  lm.mean = -1.0;
  EXPECT_THROW(generate_instance(paper_preset(), lm, 0), InvalidArgument);
  EXPECT_THROW(generate_instances(paper_preset(), LoadModel{}, 0), InvalidArgument);
}

TEST(BudgetSweep, SplitsRemainderEvenly) {
  const std::vector<double> f{0.1, 1.0 / 3.0, 0.9};
  const auto specs = budget_sweep(paper_preset(), 0, f);
  EXPECT_DOUBLE_EQ(specs[0].sps[0].budget, 0.1);
  EXPECT_DOUBLE_EQ(specs[0].sps[1].budget, 0.45);
  EXPECT_DOUBLE_EQ(specs[0].sps[2].budget, 0.45);
  for (const auto& s : specs[1].sps) EXPECT_NEAR(s.budget, 1.0 / 3.0, 1e-15);
  for (const auto& spec : specs) {
    double total = 0.0;
    for (const auto& s : spec.sps) total += s.budget;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NO_THROW(validate_scenario(spec));
  }
  const std::vector<double> bad{1.0};
  EXPECT_THROW(budget_sweep(paper_preset(), 0, bad), InvalidArgument);
}

TEST(RandomScenario, AlwaysValid) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) EXPECT_NO_THROW(normalize_scenario(random_scenario(seed)));
}

// --- JSON -----------------------------------------------------------------------------

TEST(ScenarioJson, RoundTrip) {
  auto spec = generate_instance(paper_preset(), LoadModel{}, 4);
  spec.sps[2].alpha = kInfiniteAlpha;
  spec.sps[1].support[3].weight = 2.5;
  const auto doc = scenario_to_json(spec);
  EXPECT_EQ(doc["schema_version"], 1);
  const auto back = scenario_from_json(Json::parse(doc.dump()));
  EXPECT_EQ(scenario_to_json(back), doc);
  EXPECT_TRUE(is_max_min(back.sps[2].alpha));
}

TEST(ScenarioJson, ErrorsCarryFieldPaths) {
  auto doc = scenario_to_json(paper_preset());
  doc["sps"][0]["support"][1]["users"] = -3;
  try {
    scenario_from_json(doc);
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_EQ(e.path(), "$.sps[0].support[1].users");
  }
  doc = scenario_to_json(paper_preset());
  doc["schema_version"] = 2;
  EXPECT_THROW(scenario_from_json(doc), UsageError);
  doc = scenario_to_json(paper_preset());
  doc["cells"][0].erase("resources");
  try {
    scenario_from_json(doc);
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_EQ(e.path(), "$.cells[0].resources");
  }
  doc = scenario_to_json(paper_preset());
  doc["sps"][0]["budget"] = 0.9;
  EXPECT_THROW(scenario_from_json(doc), UsageError);
}

TEST(ScenarioJson, ReportUsesPhysicalUnits) {
  const auto m = normalize_scenario(single_cell({{"A", 40.0}}, {{"k", {{"A", 10.0}}}}, {{"s", 1.0, 1.0, {at_cell("k", 2)}}}));
  const auto r = solve_eg(m);
  const auto j = report_to_json(r, m);
  EXPECT_NEAR(j["providers"][0]["classes"][0]["amounts"]["A"].get<double>(), 40.0, 1e-6);
  EXPECT_NEAR(j["providers"][0]["classes"][0]["rate"].get<double>(), 4.0, 1e-6);
  EXPECT_NEAR(j["providers"][0]["classes"][0]["rate_per_user"].get<double>(), 2.0, 1e-6);
  EXPECT_NEAR(j["prices"][0]["unit_price"].get<double>(), 1.0 / 40.0, 1e-8);
}
