#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fishermarket/error.hpp"
#include "fishermarket/report.hpp"
#include "fishermarket/scenario.hpp"

namespace fishermarket {

using Json = nlohmann::ordered_json;

inline constexpr int kScenarioSchemaVersion = 1;

/// Malformed input document; the message starts with the offending field path.
class UsageError : public Error {
 public:
  UsageError(const std::string& path, const std::string& what) : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace json_detail {

inline const Json& field(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw UsageError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw UsageError(path + "." + key, "missing field");
  return *it;
}

inline std::string as_string(const Json& v, const std::string& path) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw UsageError(path, "expected a string");
}

inline double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw UsageError(path, "expected a number");
  return v.get<double>();
}

inline std::uint64_t as_count(const Json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && std::floor(d) == d && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  throw UsageError(path, "expected a nonnegative integer");
}

inline const Json& as_array(const Json& v, const std::string& path) {
  if (!v.is_array()) throw UsageError(path, "expected an array");
  return v;
}

inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

}  // namespace json_detail

/// Alpha is a number or the string "inf".
inline double parse_alpha(const Json& v, const std::string& path) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "Infinity") return kInfiniteAlpha;
    throw UsageError(path, "expected a number or \"inf\"");
  }
  const double a = json_detail::as_number(v, path);
  if (!(a >= 0.0)) throw UsageError(path, "alpha must be nonnegative");
  return a;
}

inline Json alpha_to_json(double alpha) { return is_max_min(alpha) ? Json("inf") : Json(alpha); }

inline std::string alpha_label(double alpha) {
  if (is_max_min(alpha)) return "inf";
  std::ostringstream out;
  out.precision(17);
  out << alpha;
  return out.str();
}

inline ScenarioSpec scenario_from_json(const Json& doc) {
  using namespace json_detail;
  if (!doc.is_object()) throw UsageError("$", "scenario must be a JSON object");
  if (auto it = doc.find("schema_version"); it != doc.end()) {
    if (!it->is_number_integer() || it->get<int>() != kScenarioSchemaVersion)
      throw UsageError("$.schema_version", "unsupported version (expected 1)");
  }
  ScenarioSpec spec;
  const auto& cells = as_array(field(doc, "cells", "$"), "$.cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto path = at("$.cells", i);
    CellSpec cell;
    cell.id = as_string(field(cells[i], "id", path), path + ".id");
    const auto& res = as_array(field(cells[i], "resources", path), path + ".resources");
    for (std::size_t r = 0; r < res.size(); ++r) {
      const auto rp = at(path + ".resources", r);
      cell.resources.push_back(ResourceSpec{as_string(field(res[r], "name", rp), rp + ".name"),
                                            as_number(field(res[r], "capacity", rp), rp + ".capacity")});
    }
    spec.cells.push_back(std::move(cell));
  }
  const auto& classes = as_array(field(doc, "classes", "$"), "$.classes");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto path = at("$.classes", i);
    ClassSpec cls;
    cls.name = as_string(field(classes[i], "name", path), path + ".name");
    const auto& demand = field(classes[i], "demand", path);
    if (!demand.is_object()) throw UsageError(path + ".demand", "expected an object of resource amounts");
    for (auto it = demand.begin(); it != demand.end(); ++it)
      cls.demand[it.key()] = as_number(it.value(), path + ".demand." + it.key());
    spec.classes.push_back(std::move(cls));
  }
  const auto& sps = as_array(field(doc, "sps", "$"), "$.sps");
  for (std::size_t i = 0; i < sps.size(); ++i) {
    const auto path = at("$.sps", i);
    ProviderSpec sp;
    sp.name = as_string(field(sps[i], "name", path), path + ".name");
    sp.budget = as_number(field(sps[i], "budget", path), path + ".budget");
    sp.alpha = parse_alpha(field(sps[i], "alpha", path), path + ".alpha");
    const auto& support = as_array(field(sps[i], "support", path), path + ".support");
    for (std::size_t k = 0; k < support.size(); ++k) {
      const auto sp_path = at(path + ".support", k);
      SupportSpec sup;
      sup.cell = as_string(field(support[k], "cell", sp_path), sp_path + ".cell");
      sup.cls = as_string(field(support[k], "class", sp_path), sp_path + ".class");
      sup.users = as_count(field(support[k], "users", sp_path), sp_path + ".users");
      if (auto w = support[k].find("weight"); w != support[k].end() && !w->is_null())
        sup.weight = as_number(*w, sp_path + ".weight");
      sp.support.push_back(std::move(sup));
    }
    spec.sps.push_back(std::move(sp));
  }
  try {
    validate_scenario(spec);
  } catch (const InvalidScenario& e) {
    throw UsageError("$", e.what());
  }
  return spec;
}

inline Json scenario_to_json(const ScenarioSpec& spec) {
  Json doc;
  doc["schema_version"] = kScenarioSchemaVersion;
  doc["cells"] = Json::array();
  for (const auto& c : spec.cells) {
    Json cell{{"id", c.id}, {"resources", Json::array()}};
    for (const auto& r : c.resources) cell["resources"].push_back({{"name", r.name}, {"capacity", r.capacity}});
    doc["cells"].push_back(std::move(cell));
  }
  doc["classes"] = Json::array();
  for (const auto& k : spec.classes) {
    Json demand = Json::object();
    for (const auto& [name, amount] : k.demand) demand[name] = amount;
    doc["classes"].push_back({{"name", k.name}, {"demand", demand}});
  }
  doc["sps"] = Json::array();
  for (const auto& sp : spec.sps) {
    Json j{{"name", sp.name}, {"budget", sp.budget}, {"alpha", alpha_to_json(sp.alpha)}, {"support", Json::array()}};
    for (const auto& s : sp.support) {
      Json e{{"cell", s.cell}, {"class", s.cls}, {"users", s.users}};
      if (s.weight) e["weight"] = *s.weight;
      j["support"].push_back(std::move(e));
    }
    doc["sps"].push_back(std::move(j));
  }
  return doc;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw UsageError(path, std::string("invalid JSON: ") + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

inline ScenarioSpec load_scenario(const std::string& path) { return scenario_from_json(read_json_file(path)); }

/// Report in physical units: amounts per (provider, cell, class, resource).
inline Json report_to_json(const SolveReport& report, const Market& market) {
  Json out;
  out["method"] = std::string(method_name(report.method));
  out["converged"] = report.converged;
  out["surrogate"] = report.surrogate;
  out["iterations"] = report.iterations;
  if (report.residuals)
    out["residuals"] = {{"budget_gap", report.residuals->budget_gap},
                        {"clearing_gap", report.residuals->clearing_gap},
                        {"br_gap", report.residuals->br_gap}};
  out["prices"] = Json::array();
  if (report.prices.size() == market.resource_count())
    for (std::size_t j = 0; j < market.resource_count(); ++j) {
      const auto& r = market.resources[j];
      out["prices"].push_back({{"cell", market.cell_ids[r.cell]}, {"resource", r.name}, {"price", report.prices[j]},
                               {"unit_price", report.prices[j] / r.capacity}});
    }
  out["providers"] = Json::array();
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    const auto& p = market.providers[s];
    Json sp{{"name", p.name}, {"budget", p.budget}, {"alpha", alpha_to_json(p.alpha)}};
    if (s < report.utilities.size()) sp["utility"] = report.utilities[s];
    if (s < report.spending.size()) sp["spending"] = report.spending[s];
    const auto physical = denormalize_amounts(market, s, report.allocation.amount[s]);
    sp["classes"] = Json::array();
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
      const auto& grp = p.groups[g];
      Json amounts = Json::object();
      for (std::size_t i = 0; i < grp.entries.size(); ++i)
        amounts[market.resources[grp.entries[i].resource].name] = physical[grp.offset + i];
      sp["classes"].push_back({{"cell", market.cell_ids[grp.cell]},
                               {"class", market.class_names[grp.cls]},
                               {"users", grp.users},
                               {"rate", report.allocation.rate[s][g]},
                               {"rate_per_user", report.allocation.rate[s][g] / grp.users},
                               {"amounts", amounts}});
    }
    out["providers"].push_back(std::move(sp));
  }
  if (!report.warnings.empty()) out["warnings"] = report.warnings;
  return out;
}

}  // namespace fishermarket
