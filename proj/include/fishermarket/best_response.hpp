#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "fishermarket/error.hpp"
#include "fishermarket/scenario.hpp"
#include "fishermarket/trading_post.hpp"
#include "fishermarket/utility.hpp"

namespace fishermarket {

/// sum_g w_g pi_g: what a max-min provider pays per unit of min u/w.
inline double max_min_price_level(const Provider& p, const std::vector<double>& costs) {
  double level = 0.0;
  for (std::size_t g = 0; g < p.groups.size(); ++g) level += p.groups[g].weight * costs[g];
  return level;
}

/// Cost of one unit of service rate per group: pi_ck = sum_r p_cr d'_kr.
/// A max-min provider tolerates free classes as long as one class costs something.
inline std::vector<double> unit_costs(const Market& market, std::size_t s, const PriceVector& prices) {
  if (prices.size() != market.resource_count())
    throw InvalidArgument("price vector does not match the market's resources");
  const auto& p = market.providers.at(s);
  std::vector<double> costs;
  costs.reserve(p.groups.size());
  for (const auto& g : p.groups) {
    double pi = 0.0;
    for (const auto& e : g.entries) pi += prices[e.resource] * e.demand;
    if (!(pi > 0.0) && !is_max_min(p.alpha))
      throw InvalidArgument("provider '" + p.name + "' faces a zero price on every resource of a class");
    costs.push_back(pi);
  }
  if (is_max_min(p.alpha) && !p.groups.empty() && !(max_min_price_level(p, costs) > 0.0))
    throw InvalidArgument("provider '" + p.name + "' faces zero prices everywhere");
  return costs;
}

/// Budget share of each group at the best response, computed as a softmax of
///   (1/a) log w + ((a-1)/a) log pi   (finite a > 0),
///   log w                           (a = 1),
///   log w + log pi                  (a = inf).
inline std::vector<double> best_response_group_spend(const Market& market, std::size_t s,
                                                     const PriceVector& prices) {
  const auto& p = market.providers.at(s);
  if (p.alpha == 0.0)
    throw DegenerateLinear("provider '" + p.name + "': linear utility has no unique best response");
  const auto costs = unit_costs(market, s, prices);
  std::vector<double> logits(p.groups.size());
  for (std::size_t g = 0; g < p.groups.size(); ++g) {
    const double log_w = std::log(p.groups[g].weight);
    const double log_pi = std::log(costs[g]);
    if (is_max_min(p.alpha))
      logits[g] = log_w + log_pi;
    else
      logits[g] = log_w / p.alpha + (p.alpha - 1.0) / p.alpha * log_pi;
  }
  const double norm = detail::log_sum_exp(logits);
  std::vector<double> spend(p.groups.size());
  for (std::size_t g = 0; g < p.groups.size(); ++g) spend[g] = p.budget * std::exp(logits[g] - norm);
  return spend;
}

/// Utility-maximizing spending of provider s at fixed prices (closed form of the
/// SP's KKT system). Within a class, spending splits as p_cr d'_kr / pi_ck so
/// that every resource supports the same rate u_ck = b_ck / pi_ck.
inline std::vector<double> best_response(const PriceVector& prices, const Market& market, std::size_t s) {
  const auto& p = market.providers.at(s);
  std::vector<double> bids(p.entry_count, 0.0);
  if (is_max_min(p.alpha)) {
    const double level = max_min_price_level(p, unit_costs(market, s, prices));
    for (const auto& g : p.groups)
      for (std::size_t i = 0; i < g.entries.size(); ++i)
        bids[g.offset + i] = p.budget * g.weight * prices[g.entries[i].resource] * g.entries[i].demand / level;
    return bids;
  }
  const auto group_spend = best_response_group_spend(market, s, prices);
  const auto costs = unit_costs(market, s, prices);
  for (std::size_t g = 0; g < p.groups.size(); ++g) {
    const auto& group = p.groups[g];
    for (std::size_t i = 0; i < group.entries.size(); ++i) {
      const auto& e = group.entries[i];
      bids[group.offset + i] = group_spend[g] * prices[e.resource] * e.demand / costs[g];
    }
  }
  return bids;
}

/// Log of the largest degree-one utility provider s can afford at these prices.
/// Linear (alpha = 0) providers put the whole budget on the best value-per-cost class.
inline double best_response_log_utility(const PriceVector& prices, const Market& market, std::size_t s) {
  const auto& p = market.providers.at(s);
  const auto costs = unit_costs(market, s, prices);
  if (p.alpha == 0.0) {
    double best = 0.0;
    for (std::size_t g = 0; g < p.groups.size(); ++g) best = std::max(best, p.groups[g].weight / costs[g]);
    return std::log(p.budget * best);
  }
  if (is_max_min(p.alpha)) return std::log(p.budget) - std::log(max_min_price_level(p, costs));
  const auto spend = best_response_group_spend(market, s, prices);
  std::vector<double> rates(spend.size());
  for (std::size_t g = 0; g < spend.size(); ++g) rates[g] = spend[g] / costs[g];
  return log_sp_utility_homog(rates, provider_weights(p), p.alpha);
}

}  // namespace fishermarket
