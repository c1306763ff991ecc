#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fishermarket/best_response.hpp"
#include "fishermarket/scenario.hpp"
#include "fishermarket/trading_post.hpp"
#include "fishermarket/utility.hpp"

namespace fishermarket {

inline constexpr double kDefaultEquilibriumTolerance = 1e-6;
inline constexpr double kDefaultInvariantTolerance = 1e-9;

struct EquilibriumCheck {
  double budget_gap = 0.0;    // max_s |p . x_s - B_s|
  double clearing_gap = 0.0;  // max_j |(sum_s x_sj - 1) p_j|
  double br_gap = 0.0;        // max_s relative shortfall of U_s(x_s) below U_s(best response)

  bool holds(double tol = kDefaultEquilibriumTolerance) const {
    return budget_gap <= tol && clearing_gap <= tol && br_gap <= tol;
  }
};

/// Spending p . x_s of every provider.
inline std::vector<double> provider_spending(const Market& market, const Allocation& allocation,
                                             const PriceVector& prices) {
  std::vector<double> spent(market.provider_count(), 0.0);
  for (std::size_t s = 0; s < market.provider_count(); ++s)
    for (const auto& g : market.providers[s].groups)
      for (std::size_t i = 0; i < g.entries.size(); ++i)
        spent[s] += prices[g.entries[i].resource] * allocation.amount[s][g.offset + i];
  return spent;
}

/// Market-equilibrium certificate: budgets exhausted, Walras complementarity,
/// and every provider holding a utility-maximizing bundle at the given prices.
/// The best-response gap is relative to the best affordable degree-one utility.
inline EquilibriumCheck verify_equilibrium(const Allocation& allocation, const PriceVector& prices,
                                           const Market& market) {
  EquilibriumCheck check;
  const auto spent = provider_spending(market, allocation, prices);
  for (std::size_t s = 0; s < market.provider_count(); ++s)
    check.budget_gap = std::max(check.budget_gap, std::abs(spent[s] - market.providers[s].budget));

  const auto used = allocation.usage(market);
  for (std::size_t j = 0; j < market.resource_count(); ++j)
    check.clearing_gap = std::max(check.clearing_gap, std::abs((used[j] - 1.0) * prices[j]));

  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    const auto& p = market.providers[s];
    if (p.groups.empty()) continue;
    const double best = best_response_log_utility(prices, market, s);
    const auto rates = group_rates(p, allocation.amount[s]);
    const double held = log_sp_utility_homog(rates, provider_weights(p), p.alpha);
    const double shortfall = held >= best ? 0.0 : -std::expm1(held - best);
    check.br_gap = std::max(check.br_gap, shortfall);
  }
  return check;
}

}  // namespace fishermarket
