#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fishermarket/error.hpp"
#include "fishermarket/potential.hpp"
#include "fishermarket/report.hpp"
#include "fishermarket/scenario.hpp"
#include "fishermarket/trading_post.hpp"

namespace fishermarket {

struct DynamicsConfig {
  enum class InitialBids { uniform, custom };

  std::size_t max_iterations = 10000;
  double tolerance = 1e-8;  // on max relative price change between rounds
  InitialBids initial_policy = InitialBids::uniform;
  std::optional<BidTensor> initial_bids;
  std::size_t trace_stride = 1;  // 0 disables the potential and price traces

  void validate() const {
    if (!(tolerance > 0.0)) throw InvalidArgument("dynamics tolerance must be positive");
    if (max_iterations < 1) throw InvalidArgument("dynamics needs at least one iteration");
    if (initial_policy == InitialBids::custom && !initial_bids)
      throw InvalidArgument("custom initial bids requested but none given");
  }
};

/// Next-round spending of provider s given the current Trading-Post prices.
///   alpha = inf : b_ckr = B w p d / sum w p d
///   alpha >= 1  : b_ckr = B (p d / sum_r p d) w^(1/a) (sum_r p d)^((1-a)/(-a)) / normalizer
/// The result is rescaled so it sums to B exactly.
inline std::vector<double> bid_update(const PriceVector& prices, const Market& market, std::size_t s) {
  const auto& p = market.providers.at(s);
  if (p.alpha < 1.0)
    throw UnsupportedRegime("bid_update: provider '" + p.name + "' has alpha < 1");
  std::vector<double> bids(p.entry_count, 0.0);
  double normalizer = 0.0;
  for (const auto& g : p.groups) {
    double pd_sum = 0.0;
    for (const auto& e : g.entries) pd_sum += prices[e.resource] * e.demand;
    if (!(pd_sum > 0.0) && !is_max_min(p.alpha))
      throw InvalidArgument("bid_update: all prices of a class of provider '" + p.name + "' are zero");
    double group_factor;
    if (is_max_min(p.alpha))
      group_factor = g.weight * pd_sum;
    else
      group_factor = std::pow(g.weight, 1.0 / p.alpha) * std::pow(pd_sum, (1.0 - p.alpha) / -p.alpha);
    normalizer += group_factor;
    for (std::size_t i = 0; i < g.entries.size(); ++i) {
      const auto& e = g.entries[i];
      bids[g.offset + i] = is_max_min(p.alpha)
                               ? p.budget * g.weight * prices[e.resource] * e.demand
                               : p.budget * (prices[e.resource] * e.demand / pd_sum) * group_factor;
    }
  }
  if (!(normalizer > 0.0))
    throw InvalidArgument("bid_update: provider '" + p.name + "' faces zero prices everywhere");
  double total = 0.0;
  for (double& b : bids) {
    b /= normalizer;
    total += b;
  }
  const double fix = p.budget / total;
  for (double& b : bids) b *= fix;
  return bids;
}

/// Every provider spreads its budget evenly over its (cell, class, resource) entries.
inline BidTensor uniform_bids(const Market& market) {
  BidTensor bids = BidTensor::zeros(market);
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    const auto& p = market.providers[s];
    if (p.entry_count == 0) continue;
    std::fill(bids.spend[s].begin(), bids.spend[s].end(), p.budget / static_cast<double>(p.entry_count));
  }
  return bids;
}

/// One simultaneous round: all providers respond to the same frozen prices.
inline BidTensor dynamics_step(const BidTensor& bids, const Market& market) {
  const auto prices = tp_prices(market, bids);
  BidTensor next;
  next.spend.reserve(market.provider_count());
  for (std::size_t s = 0; s < market.provider_count(); ++s) next.spend.push_back(bid_update(prices, market, s));
  return next;
}

/// Largest price move relative to the total price level of the compared
/// resources. Slack resources have equilibrium price 0 and their prices decay
/// geometrically, so a per-resource ratio would never settle.
inline double max_relative_change(const PriceVector& before, const PriceVector& after,
                                  std::span<const std::size_t> scope = {}) {
  double level = 0.0, move = 0.0;
  const auto visit = [&](std::size_t j) {
    level += before[j];
    move = std::max(move, std::abs(after[j] - before[j]));
  };
  if (scope.empty())
    for (std::size_t j = 0; j < before.size(); ++j) visit(j);
  else
    for (std::size_t j : scope) visit(j);
  return level > 0.0 ? move / level : 0.0;
}

/// Trading-Post allocation with zero-priced entries topped up to the Leontief
/// bundle of their class. Slack prices decay toward 0 and can underflow; a free
/// resource is surplus, so handing a class the amount it needs costs nothing.
/// A max-min class whose resources are all free follows the provider's common
/// level of u / w. Subnormal prices count as free: b / p has lost its precision there.
inline bool is_free_price(double price) { return !(price >= std::numeric_limits<double>::min()); }

inline Allocation complete_free_entries(const Market& market, const PriceVector& prices, Allocation allocation) {
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    const auto& p = market.providers[s];
    auto& amount = allocation.amount[s];
    std::vector<double> rate(p.groups.size(), 0.0);
    std::vector<bool> priced(p.groups.size(), false);
    double level = std::numeric_limits<double>::infinity();
    for (std::size_t gi = 0; gi < p.groups.size(); ++gi) {
      const auto& g = p.groups[gi];
      double u = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < g.entries.size(); ++i)
        if (!is_free_price(prices[g.entries[i].resource])) {
          priced[gi] = true;
          u = std::min(u, amount[g.offset + i] / g.entries[i].demand);
        }
      if (priced[gi]) {
        rate[gi] = u;
        level = std::min(level, u / g.weight);
      }
    }
    for (std::size_t gi = 0; gi < p.groups.size(); ++gi) {
      const auto& g = p.groups[gi];
      if (!priced[gi]) rate[gi] = is_max_min(p.alpha) && std::isfinite(level) ? level * g.weight : 0.0;
      for (std::size_t i = 0; i < g.entries.size(); ++i)
        if (is_free_price(prices[g.entries[i].resource])) amount[g.offset + i] = rate[gi] * g.entries[i].demand;
    }
  }
  return Allocation::from_amounts(market, std::move(allocation.amount));
}

/// Decentralized Trading-Post dynamics for alpha in [1, inf]. Never reports
/// success silently: `converged` is false when the price criterion is not met.
inline SolveReport run_dynamics(const Market& market, const DynamicsConfig& config = {}) {
  config.validate();
  for (const auto& p : market.providers) {
    if (p.alpha < 1.0)
      throw UnsupportedRegime("run_dynamics: provider '" + p.name + "' has alpha < 1");
    if (p.groups.empty())
      throw InvalidArgument("run_dynamics: provider '" + p.name + "' serves no users");
  }

  SolveReport report;
  report.method = Method::dynamics;
  report.warnings = inactive_resource_warnings(market);

  BidTensor bids = config.initial_policy == DynamicsConfig::InitialBids::custom ? *config.initial_bids
                                                                                : uniform_bids(market);
  check_bid_layout(market, bids);
  PriceVector prices = tp_prices(market, bids);

  const auto record = [&](std::size_t t) {
    if (config.trace_stride == 0) return;
    report.trace_iterations.push_back(t);
    report.potential_trace.push_back(eval_potential(bids, market).phi_total);
    report.price_trace.push_back(prices);
  };
  record(0);

  std::size_t t = 0;
  while (t < config.max_iterations) {
    ++t;
    BidTensor next = dynamics_step(bids, market);
    PriceVector next_prices = tp_prices(market, next);
    const double change = max_relative_change(prices, next_prices);
    bids = std::move(next);
    prices = std::move(next_prices);
    if (change < config.tolerance) report.converged = true;
    if (config.trace_stride != 0 && (t % config.trace_stride == 0 || report.converged || t == config.max_iterations))
      record(t);
    if (report.converged) break;
  }
  report.iterations = t;

  auto outcome = tp_allocate(bids, market);
  report.prices = std::move(outcome.prices);
  report.allocation = complete_free_entries(market, report.prices, std::move(outcome.allocation));
  const auto used = report.allocation.usage(market);
  for (std::size_t j = 0; j < used.size(); ++j)
    if (used[j] > 1.0 + kDefaultEquilibriumTolerance && is_free_price(report.prices[j]))
      report.warnings.push_back("free resource '" + market.resources[j].name + "' at cell '" +
                                market.cell_ids[market.resources[j].cell] + "' is oversubscribed");
  report.bids = std::move(bids);
  finalize_report(report, market);
  // The dual needs every demanded price positive; slack prices may underflow.
  bool priced = true;
  for (const auto& sp : market.providers)
    for (const auto& g : sp.groups)
      for (const auto& e : g.entries) priced = priced && report.prices[e.resource] > 0.0;
  if (priced)
    report.dual_value = eval_dual(report.prices, market);
  else
    report.warnings.push_back("a demanded resource price underflowed to zero; dual value not evaluated");
  return report;
}

}  // namespace fishermarket
