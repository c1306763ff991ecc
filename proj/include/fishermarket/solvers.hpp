#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fishermarket/best_response.hpp"
#include "fishermarket/dynamics.hpp"
#include "fishermarket/equilibrium.hpp"
#include "fishermarket/error.hpp"
#include "fishermarket/interior_point.hpp"
#include "fishermarket/report.hpp"
#include "fishermarket/scenario.hpp"
#include "fishermarket/trading_post.hpp"
#include "fishermarket/utility.hpp"

namespace fishermarket {

enum class SolverMethod { automatic, dynamics, tatonnement, dual_subgradient, interior_point };

/// Fairness parameter standing in for linear providers in price-update methods.
inline constexpr double kLinearSurrogateAlpha = 1e-3;

struct SolverConfig {
  SolverMethod method = SolverMethod::automatic;
  double kappa0 = 0.1;         // initial price step
  double decay = 0.5;          // step kappa0 * t^-decay
  std::size_t max_iterations = 50000;
  double tolerance = 1e-7;     // on the equilibrium residuals

  void validate() const {
    if (!(kappa0 > 0.0)) throw InvalidArgument("solver kappa0 must be positive");
    if (!(tolerance > 0.0)) throw InvalidArgument("solver tolerance must be positive");
    if (!(decay >= 0.0)) throw InvalidArgument("solver step decay must be nonnegative");
    if (max_iterations < 1) throw InvalidArgument("solver needs at least one iteration");
  }
};

namespace detail {

inline bool all_complementary(const Market& market) {
  return std::all_of(market.providers.begin(), market.providers.end(),
                     [](const Provider& p) { return p.alpha >= 1.0; });
}

inline std::vector<double> budgets(const Market& market) {
  std::vector<double> b;
  for (const auto& p : market.providers) b.push_back(p.budget);
  return b;
}

/// Linear providers get a small positive alpha so their best response is unique.
inline Market linear_surrogate(const Market& market, bool& replaced) {
  Market copy = market;
  replaced = false;
  for (auto& p : copy.providers) {
    if (p.alpha != 0.0) continue;
    replaced = true;
    p.alpha = kLinearSurrogateAlpha;
    for (auto& g : p.groups) g.weight *= std::pow(g.users, kLinearSurrogateAlpha);
  }
  return copy;
}

/// Leontief amounts of every provider's best response at these prices.
inline std::vector<std::vector<double>> demanded_amounts(const Market& market, const PriceVector& prices) {
  std::vector<std::vector<double>> amounts;
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    const auto& p = market.providers[s];
    std::vector<double> x(p.entry_count, 0.0);
    if (!p.groups.empty()) {
      const auto bids = best_response(prices, market, s);
      for (const auto& g : p.groups)
        for (std::size_t i = 0; i < g.entries.size(); ++i) {
          const double price = prices[g.entries[i].resource];
          x[g.offset + i] = price > 0.0 ? bids[g.offset + i] / price : 0.0;
        }
    }
    amounts.push_back(std::move(x));
  }
  return amounts;
}

inline SolveReport eg_by_interior_point(const Market& market, const SolverConfig& config) {
  BarrierOptions options;
  options.gap_tolerance = std::min(options.gap_tolerance, config.tolerance);
  const auto ip = solve_rate_program(market, budgets(market), RateObjective::log_utility, options);
  SolveReport report;
  report.method = Method::interior_point;
  report.warnings = inactive_resource_warnings(market);
  report.allocation = Allocation::from_rates(market, ip.rates);
  report.prices.values = ip.prices;
  report.iterations = ip.newton_steps;
  finalize_report(report, market);
  report.converged = ip.converged && report.residuals->holds(config.tolerance);
  return report;
}

/// Price adjustment on the EG dual: multiplicative (tatonnement) or additive
/// projected (dual subgradient) steps on excess demand, then proportional repair.
inline SolveReport eg_by_price_updates(const Market& original, const SolverConfig& config, bool multiplicative) {
  bool replaced = false;
  const Market market = linear_surrogate(original, replaced);
  SolveReport report;
  report.method = multiplicative ? Method::tatonnement : Method::dual_subgradient;
  report.surrogate = replaced;
  report.warnings = inactive_resource_warnings(original);
  if (replaced)
    report.warnings.push_back("linear providers solved with alpha = " + std::to_string(kLinearSurrogateAlpha));

  const std::size_t n = market.resource_count();
  std::size_t active = 0;
  for (const auto& r : market.resources) active += r.active ? 1 : 0;
  PriceVector prices;
  prices.values.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    if (market.resources[j].active) prices.values[j] = 1.0 / static_cast<double>(active);
  const double floor = 1e-300;

  std::vector<std::vector<double>> amounts;
  std::size_t t = 0;
  while (t < config.max_iterations) {
    ++t;
    amounts = demanded_amounts(market, prices);
    const auto used = Allocation::from_amounts(market, amounts).usage(market);
    double residual = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!market.resources[j].active) continue;
      residual = std::max(residual, std::abs(used[j] - 1.0) * prices[j]);
      residual = std::max(residual, used[j] - 1.0);
    }
    if (residual < config.tolerance) {
      report.converged = true;
      break;
    }
    const double kappa = config.kappa0 * std::pow(static_cast<double>(t), -config.decay);
    for (std::size_t j = 0; j < n; ++j) {
      if (!market.resources[j].active) continue;
      const double excess = used[j] - 1.0;
      prices.values[j] = multiplicative ? prices[j] * std::exp(kappa * excess)
                                        : std::max(prices[j] + kappa * excess, floor);
    }
  }
  report.iterations = t;

  // Feasibility repair: scale each resource's allocations by min(1, 1 / demand).
  const auto used = Allocation::from_amounts(market, amounts).usage(market);
  for (std::size_t s = 0; s < market.provider_count(); ++s)
    for (const auto& g : market.providers[s].groups)
      for (std::size_t i = 0; i < g.entries.size(); ++i) {
        const double u = used[g.entries[i].resource];
        if (u > 1.0) amounts[s][g.offset + i] /= u;
      }
  report.allocation = Allocation::from_amounts(original, std::move(amounts));
  report.prices = std::move(prices);
  finalize_report(report, original);
  report.converged = report.converged && report.residuals->holds(config.tolerance);
  return report;
}

}  // namespace detail

/// Market equilibrium via the Eisenberg-Gale program. Automatic selection runs
/// the bid dynamics when every provider has alpha >= 1 and the interior-point
/// solver otherwise. `converged` is true only when the residuals meet the tolerance.
inline SolveReport solve_eg(const Market& market, const SolverConfig& config = {}) {
  config.validate();
  SolverMethod method = config.method;
  if (method == SolverMethod::automatic)
    method = detail::all_complementary(market) ? SolverMethod::dynamics : SolverMethod::interior_point;

  switch (method) {
    case SolverMethod::dynamics: {
      DynamicsConfig dyn;
      dyn.max_iterations = config.max_iterations;
      dyn.tolerance = config.tolerance * 1e-3;
      dyn.trace_stride = 0;
      auto report = run_dynamics(market, dyn);
      report.converged = report.converged && report.residuals->holds(config.tolerance);
      return report;
    }
    case SolverMethod::interior_point: return detail::eg_by_interior_point(market, config);
    case SolverMethod::tatonnement: return detail::eg_by_price_updates(market, config, true);
    case SolverMethod::dual_subgradient: return detail::eg_by_price_updates(market, config, false);
    case SolverMethod::automatic: break;
  }
  throw InvalidArgument("solve_eg: unknown method");
}

/// Utilitarian optimum: maximize sum_s B_s U_s under the capacities. The
/// objective is degree one, so the dual-subgradient inner problem is unbounded
/// or zero; only the interior-point method applies.
inline SolveReport solve_social_optimal(const Market& market, const SolverConfig& config = {}) {
  config.validate();
  if (config.method != SolverMethod::automatic && config.method != SolverMethod::interior_point)
    throw UnsupportedRegime("solve_social_optimal: only the interior-point method is available");
  BarrierOptions options;
  options.gap_tolerance = std::min(options.gap_tolerance, config.tolerance);
  const auto ip = solve_rate_program(market, detail::budgets(market), RateObjective::utility, options);
  SolveReport report;
  report.method = Method::interior_point;
  report.allocation = Allocation::from_rates(market, ip.rates);
  report.prices.values = ip.prices;
  report.iterations = ip.newton_steps;
  report.converged = ip.converged;
  fill_utilities(report, market);
  return report;
}

namespace detail {

/// Provider s alone with every resource: its own alpha-fair optimum, rates per group.
inline std::vector<double> solo_rates(const Market& market, std::size_t s) {
  std::vector<double> coefficients(market.provider_count(), 0.0);
  coefficients[s] = 1.0;
  auto ip = solve_rate_program(market, coefficients, RateObjective::log_utility);
  if (!ip.converged)
    throw DivergenceError("solo optimum of provider '" + market.providers[s].name + "' did not converge");
  return std::move(ip.rates[s]);
}

}  // namespace detail

/// Static proportional sharing: provider s owns a B_s share of every resource and
/// splits it across its classes by its own alpha-fair optimum.
inline SolveReport static_share(const Market& market) {
  std::vector<std::vector<double>> rates(market.provider_count());
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    if (market.providers[s].groups.empty()) continue;
    rates[s] = detail::solo_rates(market, s);
    for (double& u : rates[s]) u *= market.providers[s].budget;
  }
  SolveReport report;
  report.method = Method::closed_form;
  report.allocation = Allocation::from_rates(market, std::move(rates));
  report.converged = true;
  fill_utilities(report, market);
  return report;
}

/// U_s when provider s receives every resource alone.
inline std::vector<double> max_utilities(const Market& market) {
  std::vector<double> out;
  for (std::size_t s = 0; s < market.provider_count(); ++s)
    out.push_back(market.providers[s].groups.empty() ? 0.0
                                                     : sp_utility_homog(market, s, detail::solo_rates(market, s)));
  return out;
}

/// Utilitarian welfare sum_s B_s U_s.
inline double utilitarian_welfare(std::span<const double> utilities, std::span<const double> budgets) {
  if (utilities.size() != budgets.size()) throw InvalidArgument("welfare: utilities and budgets differ in length");
  double total = 0.0;
  for (std::size_t s = 0; s < utilities.size(); ++s) total += budgets[s] * utilities[s];
  return total;
}

/// Nash welfare prod_s U_s^B_s, accumulated in log space.
inline double nash_welfare(std::span<const double> utilities, std::span<const double> budgets) {
  if (utilities.size() != budgets.size())
    throw InvalidArgument("nash_welfare: utilities and budgets differ in length");
  double log_total = 0.0;
  for (std::size_t s = 0; s < utilities.size(); ++s) {
    if (!(utilities[s] > 0.0)) throw InvalidArgument("nash_welfare: utilities must be positive");
    log_total += budgets[s] * std::log(utilities[s]);
  }
  return std::exp(log_total);
}

/// 1 - ((2 sqrt S - 1) / S) (min U^ / max U^) - 1/S + min U^ / sum U^.
inline double thm4_bound(std::span<const double> max_utils) {
  if (max_utils.empty()) throw InvalidArgument("poa bound needs at least one provider");
  double lo = max_utils[0], hi = max_utils[0], sum = 0.0;
  for (double u : max_utils) {
    if (!(u > 0.0)) throw InvalidArgument("poa bound needs positive maximum utilities");
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  const double S = static_cast<double>(max_utils.size());
  return 1.0 - (2.0 * std::sqrt(S) - 1.0) / S * (lo / hi) - 1.0 / S + lo / sum;
}

struct PoaResult {
  double value = 0.0;
  double bound = 0.0;
};

/// Relative welfare loss of the equilibrium against the optimum, with its bound.
inline PoaResult poa_bound(double welfare_so, double welfare_me, std::span<const double> max_utils) {
  if (!(welfare_so > 0.0)) throw InvalidArgument("poa: optimal welfare must be positive");
  return {(welfare_so - welfare_me) / welfare_so, thm4_bound(max_utils)};
}

struct SchemeOutcome {
  std::vector<double> utilities;
  double welfare = 0.0;
  double nash_welfare = 0.0;  // 0 when some provider gets nothing
  bool converged = false;
  std::size_t iterations = 0;
};

struct WelfareReport {
  double alpha = 0.0;
  SchemeOutcome me, so, ss;
  std::vector<double> max_utilities;
  double poa_value = 0.0;
  double poa_bound = 0.0;
  std::vector<double> me_minus_ss;
  bool poa_within_bound = false;
  bool me_dominates_ss = false;
};

inline SchemeOutcome summarize(const SolveReport& report, const Market& market) {
  SchemeOutcome out;
  out.utilities = report.utilities;
  const auto b = detail::budgets(market);
  out.welfare = utilitarian_welfare(out.utilities, b);
  const bool positive = std::all_of(out.utilities.begin(), out.utilities.end(), [](double u) { return u > 0.0; });
  out.nash_welfare = positive ? nash_welfare(out.utilities, b) : 0.0;
  out.converged = report.converged;
  out.iterations = report.iterations;
  return out;
}

/// ME, SO and SS on one normalized market, with the PoA and dominance checks.
inline WelfareReport compare_schemes(const Market& market, const SolverConfig& config = {},
                                     double dominance_slack = 1e-8) {
  WelfareReport r;
  r.alpha = market.providers.empty() ? 0.0 : market.providers.front().alpha;
  r.me = summarize(solve_eg(market, config), market);
  SolverConfig so_config = config;
  so_config.method = SolverMethod::automatic;
  r.so = summarize(solve_social_optimal(market, so_config), market);
  r.ss = summarize(static_share(market), market);
  r.max_utilities = max_utilities(market);
  const auto pr = poa_bound(r.so.welfare, r.me.welfare, r.max_utilities);
  r.poa_value = pr.value;
  r.poa_bound = pr.bound;
  r.poa_within_bound = r.poa_value <= r.poa_bound;
  r.me_dominates_ss = true;
  for (std::size_t s = 0; s < r.me.utilities.size(); ++s) {
    r.me_minus_ss.push_back(r.me.utilities[s] - r.ss.utilities[s]);
    if (r.me.utilities[s] < r.ss.utilities[s] - dominance_slack * std::max(1.0, r.ss.utilities[s]))
      r.me_dominates_ss = false;
  }
  return r;
}

/// compare_schemes across a list of alphas applied to every provider.
inline std::vector<WelfareReport> compare_schemes(const ScenarioSpec& spec, std::span<const double> alphas,
                                                  const SolverConfig& config = {}) {
  std::vector<WelfareReport> out;
  for (double a : alphas) {
    ScenarioSpec copy = spec;
    for (auto& sp : copy.sps) sp.alpha = a;
    out.push_back(compare_schemes(normalize_scenario(copy), config));
  }
  return out;
}

}  // namespace fishermarket
