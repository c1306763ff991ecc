#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fishermarket/best_response.hpp"
#include "fishermarket/error.hpp"
#include "fishermarket/scenario.hpp"
#include "fishermarket/trading_post.hpp"

// Convex potential of the Trading-Post bid game for alpha in [1, inf], its
// dual, and the KL machinery that makes the bid update a mirror-descent step.
//
// With p = p(b) the per-provider pieces are
//   alpha = 1        : sum_e b_e log(b_e / (p_j d_e))
//   1 < alpha < inf  : sum_e b_e log(b_e / (p_j d_e)) + 1/(alpha-1) sum_g b_g log(b_g / w_g)
//   alpha = inf      : sum_e b_e log(b_e / (w_g p_j d_e))
// where e runs over (cell, class, resource) entries and g over (cell, class) groups.
// An alpha = 1 provider's feasible set is b_g = B w_g / sum w (its Cobb-Douglas split).

namespace fishermarket {

/// Lower bound applied to arguments of logarithms in potential evaluation only.
inline constexpr double kLogFloor = 1e-300;

struct PotentialBreakdown {
  double phi_eq1 = 0.0;
  double phi_between = 0.0;
  double phi_inf = 0.0;
  double phi_total = 0.0;
};

/// sum_i x_i log(x_i / y_i), with 0 log(0 / y) = 0.
inline double kl_a(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("kl_a: vectors differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    if (!(y[i] > 0.0)) throw DivergenceError("kl_a: reference vanishes where the argument is positive");
    total += x[i] * std::log(x[i] / y[i]);
  }
  return total;
}

/// KL over per-(cell, class) aggregates; callers pass b_ck = sum_r b_ckr.
inline double kl_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("kl_b: vectors differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    if (!(y[i] > 0.0)) throw DivergenceError("kl_b: reference vanishes where the argument is positive");
    total += x[i] * std::log(x[i] / y[i]);
  }
  return total;
}

namespace detail {

inline void require_complementary_regime(const Market& market) {
  for (const auto& p : market.providers)
    if (p.alpha < 1.0)
      throw UnsupportedRegime("provider '" + p.name + "' has alpha < 1; the potential covers alpha in [1, inf]");
}

inline double xlog_ratio(double x, double denom) {
  if (x == 0.0) return 0.0;
  return x * std::log(std::max(x, kLogFloor) / std::max(denom, kLogFloor));
}

/// One provider's potential piece at bids `b` with prices held at `prices`.
inline double provider_piece(const Market& market, std::size_t s, std::span<const double> b,
                             const PriceVector& prices) {
  const auto& p = market.providers[s];
  double value = 0.0;
  for (const auto& g : p.groups) {
    const double scale = is_max_min(p.alpha) ? g.weight : 1.0;
    double group_total = 0.0;
    for (std::size_t i = 0; i < g.entries.size(); ++i) {
      const auto& e = g.entries[i];
      const double bid = b[g.offset + i];
      group_total += bid;
      value += xlog_ratio(bid, scale * prices[e.resource] * e.demand);
    }
    if (p.alpha > 1.0 && !is_max_min(p.alpha)) value += xlog_ratio(group_total, g.weight) / (p.alpha - 1.0);
  }
  return value;
}

}  // namespace detail

/// Potential at bids b, with prices induced by the bids themselves.
inline PotentialBreakdown eval_potential(const BidTensor& bids, const Market& market) {
  detail::require_complementary_regime(market);
  const auto prices = tp_prices(market, bids);
  PotentialBreakdown out;
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    const double piece = detail::provider_piece(market, s, bids.spend[s], prices);
    const double alpha = market.providers[s].alpha;
    if (alpha == 1.0)
      out.phi_eq1 += piece;
    else if (is_max_min(alpha))
      out.phi_inf += piece;
    else
      out.phi_between += piece;
  }
  out.phi_total = out.phi_eq1 + out.phi_between + out.phi_inf;
  return out;
}

/// Analytic gradient of the potential (prices move with the bids).
inline BidTensor potential_gradient(const BidTensor& bids, const Market& market) {
  detail::require_complementary_regime(market);
  const auto prices = tp_prices(market, bids);
  BidTensor grad = BidTensor::zeros(market);
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    const auto& p = market.providers[s];
    const auto group_totals = bids.group_totals(market, s);
    for (std::size_t gi = 0; gi < p.groups.size(); ++gi) {
      const auto& g = p.groups[gi];
      double extra = 0.0;
      if (is_max_min(p.alpha))
        extra = -std::log(g.weight);
      else if (p.alpha > 1.0)
        extra = (1.0 + std::log(group_totals[gi] / g.weight)) / (p.alpha - 1.0);
      for (std::size_t i = 0; i < g.entries.size(); ++i) {
        const auto& e = g.entries[i];
        const double bid = bids.spend[s][g.offset + i];
        if (!(bid > 0.0)) throw DivergenceError("potential gradient needs strictly positive bids");
        grad.spend[s][g.offset + i] = std::log(bid / (prices[e.resource] * e.demand)) + extra;
      }
    }
  }
  return grad;
}

/// Dual objective: the potential's per-provider terms at the best-response
/// spending b(p), prices held fixed.
inline double eval_dual(const PriceVector& prices, const Market& market) {
  detail::require_complementary_regime(market);
  if (prices.size() != market.resource_count())
    throw InvalidArgument("eval_dual: price vector does not match the market");
  double total = 0.0;
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    for (const auto& g : market.providers[s].groups)
      for (const auto& e : g.entries)
        if (!(prices[e.resource] > 0.0))
          throw InvalidArgument("eval_dual: zero price on a demanded resource");
    const auto b = best_response(prices, market, s);
    total += detail::provider_piece(market, s, b, prices);
  }
  return total;
}

/// Bregman divergence generating the bid dynamics:
///   d_g(b, b') = sum_s KL_a(b_s || b'_s) + sum_{1<alpha<inf} KL_b(b_s || b'_s) / (alpha - 1).
inline double bregman_divergence(const BidTensor& b, const BidTensor& b_ref, const Market& market) {
  detail::require_complementary_regime(market);
  check_bid_layout(market, b);
  check_bid_layout(market, b_ref);
  double total = 0.0;
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    total += kl_a(b.spend[s], b_ref.spend[s]);
    const double alpha = market.providers[s].alpha;
    if (alpha > 1.0 && !is_max_min(alpha))
      total += kl_b(b.group_totals(market, s), b_ref.group_totals(market, s)) / (alpha - 1.0);
  }
  return total;
}

struct BregmanGap {
  double lower_gap = 0.0;  // Phi(b) - Phi(b') - <grad Phi(b'), b - b'>
  double upper_gap = 0.0;  // d_g(b, b') - lower_gap
};

/// Both sides of the 1-Bregman-convexity sandwich at the pair (b, b').
inline BregmanGap bregman_gap(const BidTensor& b, const BidTensor& b_prev, const Market& market) {
  const double phi = eval_potential(b, market).phi_total;
  const double phi_prev = eval_potential(b_prev, market).phi_total;
  const auto grad = potential_gradient(b_prev, market);
  double inner = 0.0;
  for (std::size_t s = 0; s < market.provider_count(); ++s)
    for (std::size_t e = 0; e < b.spend[s].size(); ++e)
      inner += grad.spend[s][e] * (b.spend[s][e] - b_prev.spend[s][e]);
  BregmanGap gap;
  gap.lower_gap = phi - phi_prev - inner;
  gap.upper_gap = bregman_divergence(b, b_prev, market) - gap.lower_gap;
  return gap;
}

}  // namespace fishermarket
