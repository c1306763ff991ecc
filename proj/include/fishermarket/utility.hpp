#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "fishermarket/error.hpp"
#include "fishermarket/scenario.hpp"

namespace fishermarket {

/// Leontief service rate: min_r x_r / d_r over the consumed resources.
inline double service_rate(std::span<const double> amounts, std::span<const double> demands) {
  if (amounts.size() != demands.size())
    throw InvalidArgument("service_rate: amount and demand vectors differ in length");
  if (amounts.empty()) throw InvalidArgument("service_rate: empty resource bundle");
  double rate = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < amounts.size(); ++r) {
    if (!(demands[r] > 0.0)) throw InvalidArgument("service_rate: demand must be positive");
    rate = std::min(rate, amounts[r] / demands[r]);
  }
  return rate;
}

/// Utility value with an explicit marker for the zero-rate limits of alpha >= 1.
struct UtilityValue {
  enum class Kind {
    finite,
    unbounded_below,  // alpha > 1 with a weighted class at rate 0: -inf
    zero_product,     // alpha = 1 (or inf) with a class at rate 0: product collapses to 0
  };
  double value = 0.0;
  Kind kind = Kind::finite;

  bool degenerate() const { return kind != Kind::finite; }
  friend bool operator<(const UtilityValue& a, const UtilityValue& b) { return a.value < b.value; }
};

namespace detail {

inline void check_rates(std::span<const double> rates, std::span<const double> weights, double alpha) {
  if (rates.size() != weights.size()) throw InvalidArgument("utility: rates and weights differ in length");
  if (std::isnan(alpha) || alpha < 0.0) throw InvalidArgument("utility: alpha must be nonnegative");
  for (double u : rates)
    if (!(u >= 0.0)) throw InvalidArgument("utility: negative service rate");
}

inline double log_sum_exp(std::span<const double> terms) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double t : terms) peak = std::max(peak, t);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

}  // namespace detail

/// Per-class alpha-fair SP utility (sum w u^(1-a)/(1-a) and its alpha = 0, 1, inf cases).
inline UtilityValue sp_utility(std::span<const double> rates, std::span<const double> weights,
                               double alpha) {
  detail::check_rates(rates, weights, alpha);
  using Kind = UtilityValue::Kind;
  if (alpha == 0.0) {
    double total = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) total += weights[i] * rates[i];
    return {total, Kind::finite};
  }
  if (is_max_min(alpha)) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rates.size(); ++i) worst = std::min(worst, rates[i] / weights[i]);
    return {worst, worst == 0.0 ? Kind::zero_product : Kind::finite};
  }
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (rates[i] == 0.0 && weights[i] > 0.0 && alpha >= 1.0) {
      if (alpha == 1.0) return {0.0, Kind::zero_product};
      return {-std::numeric_limits<double>::infinity(), Kind::unbounded_below};
    }
  }
  if (alpha == 1.0) {
    double log_product = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i)
      if (weights[i] > 0.0) log_product += weights[i] * std::log(rates[i]);
    return {std::exp(log_product), Kind::finite};
  }
  const double rho = 1.0 - alpha;
  double total = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i)
    total += weights[i] * std::pow(rates[i], rho) / rho;
  return {total, Kind::finite};
}

/// Natural log of the degree-one aggregate (sum w u^(1-a))^(1/(1-a)); weighted
/// geometric mean at alpha = 1, min u / w at alpha = inf. Returns -inf when the
/// aggregate is zero.
inline double log_sp_utility_homog(std::span<const double> rates, std::span<const double> weights,
                                   double alpha) {
  detail::check_rates(rates, weights, alpha);
  if (rates.empty()) return -std::numeric_limits<double>::infinity();
  if (is_max_min(alpha)) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rates.size(); ++i) worst = std::min(worst, rates[i] / weights[i]);
    return std::log(worst);
  }
  if (alpha == 1.0) {
    double total_weight = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      if (rates[i] == 0.0) return -std::numeric_limits<double>::infinity();
      total_weight += weights[i];
      acc += weights[i] * std::log(rates[i]);
    }
    return acc / total_weight;
  }
  const double rho = 1.0 - alpha;
  std::vector<double> terms;
  terms.reserve(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    if (rates[i] == 0.0) {
      if (rho < 0.0) return -std::numeric_limits<double>::infinity();
      continue;
    }
    terms.push_back(std::log(weights[i]) + rho * std::log(rates[i]));
  }
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  return detail::log_sum_exp(terms) / rho;
}

/// Degree-one homogeneous SP utility used by the EG program and the welfare comparisons.
inline double sp_utility_homog(std::span<const double> rates, std::span<const double> weights,
                               double alpha) {
  return std::exp(log_sp_utility_homog(rates, weights, alpha));
}

/// Class weights of a provider in group order.
inline std::vector<double> provider_weights(const Provider& provider) {
  std::vector<double> w;
  w.reserve(provider.groups.size());
  for (const auto& g : provider.groups) w.push_back(g.weight);
  return w;
}

inline UtilityValue sp_utility(const Market& market, std::size_t s, std::span<const double> rates) {
  const auto& p = market.providers.at(s);
  return sp_utility(rates, provider_weights(p), p.alpha);
}

inline double sp_utility_homog(const Market& market, std::size_t s, std::span<const double> rates) {
  const auto& p = market.providers.at(s);
  return sp_utility_homog(rates, provider_weights(p), p.alpha);
}

/// Rates u_ck = min_r x_ckr / d'_kr of one provider from its flat amount vector.
inline std::vector<double> group_rates(const Provider& provider, std::span<const double> amounts) {
  if (amounts.size() != provider.entry_count)
    throw InvalidArgument("group_rates: amount vector does not match provider layout");
  std::vector<double> rates;
  rates.reserve(provider.groups.size());
  for (const auto& g : provider.groups) {
    double rate = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.entries.size(); ++i)
      rate = std::min(rate, amounts[g.offset + i] / g.entries[i].demand);
    rates.push_back(rate);
  }
  return rates;
}

}  // namespace fishermarket
