#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fishermarket/error.hpp"
#include "fishermarket/scenario.hpp"

namespace fishermarket {

/// The seven-cell, three-provider slicing setup used in the numerical study.
/// Every supported class starts with 100 users; draw loads with a LoadModel.
inline ScenarioSpec paper_preset() {
  ScenarioSpec spec;
  for (int c = 1; c <= 7; ++c)
    spec.cells.push_back(CellSpec{std::to_string(c), {{"CPU", 30.0}, {"RAM", 126.0}, {"BW", 40.0}}});
  spec.classes = {
      {"BW-intensive", {{"CPU", 1.0}, {"RAM", 8.0}, {"BW", 10.0}}},
      {"CPU-intensive", {{"CPU", 4.0}, {"RAM", 8.0}, {"BW", 3.0}}},
      {"RAM-intensive", {{"CPU", 1.0}, {"RAM", 32.0}, {"BW", 3.0}}},
      {"Balanced", {{"CPU", 5.0}, {"RAM", 40.0}, {"BW", 5.0}}},
  };
  const std::vector<std::pair<std::string, std::string>> providers = {
      {"SP1", "BW-intensive"}, {"SP2", "CPU-intensive"}, {"SP3", "RAM-intensive"}};
  for (const auto& [name, own_class] : providers) {
    ProviderSpec sp{name, 1.0 / 3.0, 1.0, {}};
    for (const auto& cell : spec.cells) {
      sp.support.push_back(SupportSpec{cell.id, own_class, 100, std::nullopt});
      sp.support.push_back(SupportSpec{cell.id, "Balanced", 100, std::nullopt});
    }
    spec.sps.push_back(std::move(sp));
  }
  return spec;
}

/// Sets every provider's fairness parameter; explicit weight overrides are kept.
inline ScenarioSpec set_alpha(ScenarioSpec spec, double alpha) {
  for (auto& sp : spec.sps) sp.alpha = alpha;
  return spec;
}

struct LoadModel {
  enum class Spread { variance, stddev };  // how `variance` is read
  enum class Rounding { nearest, down };

  double mean = 100.0;
  double variance = 50.0;
  Spread spread = Spread::variance;
  double floor = 1.0;
  Rounding rounding = Rounding::nearest;
  std::uint64_t seed = 1;

  double sigma() const { return spread == Spread::variance ? std::sqrt(variance) : variance; }

  void validate() const {
    if (!(mean > 0.0)) throw InvalidArgument("load model mean must be positive");
    if (!(variance >= 0.0)) throw InvalidArgument("load model variance must be nonnegative");
    if (!(floor >= 0.0)) throw InvalidArgument("load model floor must be nonnegative");
  }
};

/// SplitMix64 finalizer; derives independent per-instance streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Instance `index` of a load-model batch; identical whether drawn alone or in a batch.
inline ScenarioSpec generate_instance(const ScenarioSpec& tmpl, const LoadModel& load, std::uint64_t index) {
  load.validate();
  std::mt19937_64 rng(mix_seed(load.seed, index));
  const double sigma = load.sigma();
  std::normal_distribution<double> normal(load.mean, sigma > 0.0 ? sigma : 1.0);
  ScenarioSpec spec = tmpl;
  for (auto& sp : spec.sps)
    for (auto& sup : sp.support) {
      const double draw = sigma > 0.0 ? normal(rng) : load.mean;
      const double kept = std::max(draw, load.floor);
      const double rounded = load.rounding == LoadModel::Rounding::nearest ? std::round(kept) : std::floor(kept);
      sup.users = static_cast<std::uint64_t>(std::max(rounded, 0.0));
    }
  return spec;
}

inline std::vector<ScenarioSpec> generate_instances(const ScenarioSpec& tmpl, const LoadModel& load,
                                                    std::size_t count) {
  if (count < 1) throw InvalidArgument("generate_instances: count must be at least 1");
  std::vector<ScenarioSpec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_instance(tmpl, load, i));
  return out;
}

/// Gives provider `s` budget share f and splits the rest evenly among the others.
inline std::vector<ScenarioSpec> budget_sweep(const ScenarioSpec& tmpl, std::size_t s,
                                              std::span<const double> fractions) {
  if (s >= tmpl.sps.size()) throw InvalidArgument("budget_sweep: provider index out of range");
  if (tmpl.sps.size() < 2) throw InvalidArgument("budget_sweep: needs at least two providers");
  std::vector<ScenarioSpec> out;
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0)) throw InvalidArgument("budget_sweep: fractions must lie in (0, 1)");
    ScenarioSpec spec = tmpl;
    const double rest = (1.0 - f) / static_cast<double>(spec.sps.size() - 1);
    for (std::size_t i = 0; i < spec.sps.size(); ++i) spec.sps[i].budget = i == s ? f : rest;
    out.push_back(std::move(spec));
  }
  return out;
}

/// Shape of the randomized instance family used for property checks.
struct RandomFamily {
  std::size_t min_providers = 2, max_providers = 4;
  std::size_t min_cells = 2, max_cells = 4;
  std::size_t resources = 3;
  std::size_t classes = 3;
  std::size_t max_classes_per_cell = 2;
  std::uint64_t min_users = 1, max_users = 60;
  std::vector<double> alphas = {1.0, 1.5, 2.0, 5.0, kInfiniteAlpha};
};

/// Random market: random capacities, demands, supports, loads and budgets.
inline ScenarioSpec random_scenario(std::uint64_t seed, const RandomFamily& family = {}) {
  std::mt19937_64 rng(mix_seed(seed, 0x5EED));
  const auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ScenarioSpec spec;
  const std::size_t cells = pick(family.min_cells, family.max_cells);
  const std::size_t providers = pick(family.min_providers, family.max_providers);
  for (std::size_t c = 0; c < cells; ++c) {
    CellSpec cell{"c" + std::to_string(c), {}};
    for (std::size_t r = 0; r < family.resources; ++r)
      cell.resources.push_back({"r" + std::to_string(r), 10.0 + 90.0 * unit(rng)});
    spec.cells.push_back(std::move(cell));
  }
  for (std::size_t k = 0; k < family.classes; ++k) {
    ClassSpec cls{"k" + std::to_string(k), {}};
    for (std::size_t r = 0; r < family.resources; ++r) cls.demand["r" + std::to_string(r)] = 0.5 + 9.5 * unit(rng);
    spec.classes.push_back(std::move(cls));
  }
  std::vector<double> raw_budgets;
  for (std::size_t s = 0; s < providers; ++s) raw_budgets.push_back(0.2 + unit(rng));
  double budget_total = 0.0;
  for (double b : raw_budgets) budget_total += b;

  for (std::size_t s = 0; s < providers; ++s) {
    ProviderSpec sp{"sp" + std::to_string(s), raw_budgets[s] / budget_total,
                    family.alphas[pick(0, family.alphas.size() - 1)], {}};
    for (std::size_t c = 0; c < cells; ++c) {
      if (c > 0 && unit(rng) < 0.25) continue;  // not every provider covers every cell
      std::vector<std::size_t> order(family.classes);
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::shuffle(order.begin(), order.end(), rng);
      const std::size_t served = pick(1, std::min(family.max_classes_per_cell, family.classes));
      for (std::size_t i = 0; i < served; ++i)
        sp.support.push_back(SupportSpec{spec.cells[c].id, spec.classes[order[i]].name,
                                         static_cast<std::uint64_t>(pick(family.min_users, family.max_users)),
                                         std::nullopt});
    }
    spec.sps.push_back(std::move(sp));
  }
  // Exact unit budget sum: fold rounding residue into the last provider.
  double head = 0.0;
  for (std::size_t s = 0; s + 1 < providers; ++s) head += spec.sps[s].budget;
  spec.sps.back().budget = 1.0 - head;
  return spec;
}

}  // namespace fishermarket
