#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fishermarket/error.hpp"

namespace fishermarket {

inline constexpr double kInfiniteAlpha = std::numeric_limits<double>::infinity();
inline constexpr double kBudgetSumTolerance = 1e-12;

inline bool is_max_min(double alpha) { return std::isinf(alpha) && alpha > 0; }

// ---------------------------------------------------------------------------
// Physical-unit scenario description (what the JSON files carry).
// ---------------------------------------------------------------------------

struct ResourceSpec {
  std::string name;
  double capacity = 0.0;
};

struct CellSpec {
  std::string id;
  std::vector<ResourceSpec> resources;
};

/// A user class; `demand` maps resource name to the amount needed per unit
/// service rate. Resources absent from the map are not consumed.
struct ClassSpec {
  std::string name;
  std::map<std::string, double> demand;
};

struct SupportSpec {
  std::string cell;
  std::string cls;
  std::uint64_t users = 0;
  std::optional<double> weight;
};

struct ProviderSpec {
  std::string name;
  double budget = 0.0;
  double alpha = 1.0;
  std::vector<SupportSpec> support;
};

struct ScenarioSpec {
  std::vector<CellSpec> cells;
  std::vector<ClassSpec> classes;
  std::vector<ProviderSpec> sps;
};

/// Class weight used in the SP utility: n^alpha for finite alpha, n at alpha = inf,
/// unless the support entry overrides it.
inline double effective_weight(const SupportSpec& support, double alpha) {
  if (support.weight) return *support.weight;
  const auto n = static_cast<double>(support.users);
  if (support.users == 0) return 0.0;
  if (is_max_min(alpha)) return n;
  return std::pow(n, alpha);
}

// ---------------------------------------------------------------------------
// Normalized market: every capacity rescaled to 1, demands d' = d / C.
// ---------------------------------------------------------------------------

struct MarketResource {
  std::size_t cell = 0;
  std::string name;
  double capacity = 1.0;  // physical capacity C_cr
  bool active = false;    // consumed by at least one supported class
};

struct DemandEntry {
  std::size_t resource = 0;  // index into Market::resources
  double demand = 0.0;       // normalized d'_kr
};

/// One (cell, class) pair served by a provider. Its demand entries occupy
/// `[offset, offset + entries.size())` in the provider's flat bid vector.
struct ServiceGroup {
  std::size_t cell = 0;
  std::size_t cls = 0;
  double users = 0.0;
  double weight = 0.0;
  std::vector<DemandEntry> entries;
  std::size_t offset = 0;
};

struct Provider {
  std::string name;
  double budget = 0.0;
  double alpha = 1.0;
  std::vector<ServiceGroup> groups;
  std::size_t entry_count = 0;

  double total_weight() const {
    double total = 0.0;
    for (const auto& g : groups) total += g.weight;
    return total;
  }
};

struct Market {
  std::vector<std::string> cell_ids;
  std::vector<std::string> class_names;
  std::vector<MarketResource> resources;
  std::vector<Provider> providers;

  std::size_t resource_count() const { return resources.size(); }
  std::size_t provider_count() const { return providers.size(); }

  std::optional<std::size_t> find_resource(std::size_t cell, const std::string& name) const {
    for (std::size_t j = 0; j < resources.size(); ++j)
      if (resources[j].cell == cell && resources[j].name == name) return j;
    return std::nullopt;
  }
};

namespace detail {

template <class Range, class Key>
std::optional<std::size_t> index_of(const Range& range, const Key& key) {
  std::size_t i = 0;
  for (const auto& item : range) {
    if (item == key) return i;
    ++i;
  }
  return std::nullopt;
}

}  // namespace detail

/// Checks the structural invariants of a scenario; throws InvalidScenario.
inline void validate_scenario(const ScenarioSpec& spec) {
  if (spec.sps.empty()) throw InvalidScenario("scenario has no service providers");
  double budget_sum = 0.0;
  for (const auto& sp : spec.sps) {
    if (!(sp.budget > 0.0) || !std::isfinite(sp.budget))
      throw InvalidScenario("provider '" + sp.name + "' has a nonpositive budget");
    if (std::isnan(sp.alpha) || sp.alpha < 0.0)
      throw InvalidScenario("provider '" + sp.name + "' has a negative alpha");
    budget_sum += sp.budget;
  }
  if (std::abs(budget_sum - 1.0) > kBudgetSumTolerance)
    throw InvalidScenario("budgets must sum to 1 (got " + std::to_string(budget_sum) + ")");

  for (const auto& cell : spec.cells) {
    for (const auto& r : cell.resources)
      if (!(r.capacity > 0.0) || !std::isfinite(r.capacity))
        throw InvalidScenario("resource '" + r.name + "' at cell '" + cell.id +
                              "' has nonpositive capacity");
  }
  for (const auto& cls : spec.classes) {
    if (cls.demand.empty()) throw InvalidScenario("class '" + cls.name + "' consumes nothing");
    for (const auto& [name, amount] : cls.demand)
      if (!(amount > 0.0) || !std::isfinite(amount))
        throw InvalidScenario("class '" + cls.name + "' has nonpositive demand for '" + name + "'");
  }
  for (const auto& sp : spec.sps) {
    for (const auto& sup : sp.support) {
      auto cell = std::find_if(spec.cells.begin(), spec.cells.end(),
                               [&](const CellSpec& c) { return c.id == sup.cell; });
      if (cell == spec.cells.end())
        throw InvalidScenario("provider '" + sp.name + "' references unknown cell '" + sup.cell + "'");
      auto cls = std::find_if(spec.classes.begin(), spec.classes.end(),
                              [&](const ClassSpec& c) { return c.name == sup.cls; });
      if (cls == spec.classes.end())
        throw InvalidScenario("provider '" + sp.name + "' references unknown class '" + sup.cls + "'");
      for (const auto& [name, amount] : cls->demand) {
        auto res = std::find_if(cell->resources.begin(), cell->resources.end(),
                                [&](const ResourceSpec& r) { return r.name == name; });
        if (res == cell->resources.end())
          throw InvalidScenario("class '" + sup.cls + "' needs '" + name + "' which cell '" +
                                sup.cell + "' does not offer");
      }
      if (sup.weight && (!(*sup.weight >= 0.0) || !std::isfinite(*sup.weight)))
        throw InvalidScenario("provider '" + sp.name + "' has an invalid class weight");
    }
  }
}

/// Rescales every capacity to 1 and every demand to d / C. Support entries with
/// zero users (or zero weight) are dropped: they carry no utility.
inline Market normalize_scenario(const ScenarioSpec& spec) {
  validate_scenario(spec);
  Market market;
  for (std::size_t c = 0; c < spec.cells.size(); ++c) {
    market.cell_ids.push_back(spec.cells[c].id);
    for (const auto& r : spec.cells[c].resources)
      market.resources.push_back(MarketResource{c, r.name, r.capacity, false});
  }
  for (const auto& cls : spec.classes) market.class_names.push_back(cls.name);

  for (const auto& sp : spec.sps) {
    Provider provider{sp.name, sp.budget, sp.alpha, {}, 0};
    for (const auto& sup : sp.support) {
      const double weight = effective_weight(sup, sp.alpha);
      if (sup.users == 0 || weight <= 0.0) continue;
      const std::size_t c = *detail::index_of(market.cell_ids, sup.cell);
      const std::size_t k = *detail::index_of(market.class_names, sup.cls);
      ServiceGroup group{c, k, static_cast<double>(sup.users), weight, {}, provider.entry_count};
      for (const auto& [name, amount] : spec.classes[k].demand) {
        const std::size_t j = *market.find_resource(c, name);
        group.entries.push_back(DemandEntry{j, amount / market.resources[j].capacity});
        market.resources[j].active = true;
      }
      provider.entry_count += group.entries.size();
      provider.groups.push_back(std::move(group));
    }
    market.providers.push_back(std::move(provider));
  }
  return market;
}

/// Converts normalized per-entry amounts of one provider back to physical units.
inline std::vector<double> denormalize_amounts(const Market& market, std::size_t s,
                                               std::span<const double> fractions) {
  const auto& provider = market.providers.at(s);
  if (fractions.size() != provider.entry_count)
    throw InvalidArgument("amount vector does not match provider layout");
  std::vector<double> physical(fractions.size());
  for (const auto& g : provider.groups)
    for (std::size_t i = 0; i < g.entries.size(); ++i)
      physical[g.offset + i] = fractions[g.offset + i] * market.resources[g.entries[i].resource].capacity;
  return physical;
}

/// Physical base demand of a normalized entry.
inline double physical_demand(const Market& market, const DemandEntry& entry) {
  return entry.demand * market.resources[entry.resource].capacity;
}

/// Copy of the market with every provider's alpha replaced; weights are
/// recomputed from user counts.
inline Market with_alpha(const Market& market, double alpha) {
  Market copy = market;
  for (auto& p : copy.providers) {
    p.alpha = alpha;
    for (auto& g : p.groups) g.weight = is_max_min(alpha) ? g.users : std::pow(g.users, alpha);
  }
  return copy;
}

}  // namespace fishermarket
