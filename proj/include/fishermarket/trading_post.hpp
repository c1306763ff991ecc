#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "fishermarket/error.hpp"
#include "fishermarket/scenario.hpp"
#include "fishermarket/utility.hpp"

namespace fishermarket {

/// Spending b[s][entry] of every provider; entry layout follows Market groups.
struct BidTensor {
  std::vector<std::vector<double>> spend;

  static BidTensor zeros(const Market& market) {
    BidTensor bids;
    for (const auto& p : market.providers) bids.spend.emplace_back(p.entry_count, 0.0);
    return bids;
  }

  double provider_total(std::size_t s) const {
    return std::accumulate(spend[s].begin(), spend[s].end(), 0.0);
  }

  /// b_ck = sum_r b_ckr for every group of provider s.
  std::vector<double> group_totals(const Market& market, std::size_t s) const {
    const auto& p = market.providers[s];
    std::vector<double> totals;
    totals.reserve(p.groups.size());
    for (const auto& g : p.groups) {
      double t = 0.0;
      for (std::size_t i = 0; i < g.entries.size(); ++i) t += spend[s][g.offset + i];
      totals.push_back(t);
    }
    return totals;
  }
};

/// Price of the whole (normalized) resource j; per physical unit it is p_j / C_j.
struct PriceVector {
  std::vector<double> values;

  double operator[](std::size_t j) const { return values[j]; }
  double& operator[](std::size_t j) { return values[j]; }
  std::size_t size() const { return values.size(); }
};

/// Normalized resource fractions per provider entry plus the induced class rates.
struct Allocation {
  std::vector<std::vector<double>> amount;
  std::vector<std::vector<double>> rate;

  static Allocation from_amounts(const Market& market, std::vector<std::vector<double>> amounts) {
    Allocation a;
    a.amount = std::move(amounts);
    for (std::size_t s = 0; s < market.providers.size(); ++s)
      a.rate.push_back(group_rates(market.providers[s], a.amount[s]));
    return a;
  }

  /// Allocation where every class gets exactly its Leontief bundle x = u d'.
  static Allocation from_rates(const Market& market, std::vector<std::vector<double>> rates) {
    Allocation a;
    for (std::size_t s = 0; s < market.providers.size(); ++s) {
      const auto& p = market.providers[s];
      std::vector<double> amounts(p.entry_count, 0.0);
      for (std::size_t g = 0; g < p.groups.size(); ++g)
        for (std::size_t i = 0; i < p.groups[g].entries.size(); ++i)
          amounts[p.groups[g].offset + i] = rates[s][g] * p.groups[g].entries[i].demand;
      a.amount.push_back(std::move(amounts));
    }
    a.rate = std::move(rates);
    return a;
  }

  /// Total normalized usage of every market resource.
  std::vector<double> usage(const Market& market) const {
    std::vector<double> used(market.resource_count(), 0.0);
    for (std::size_t s = 0; s < market.providers.size(); ++s)
      for (const auto& g : market.providers[s].groups)
        for (std::size_t i = 0; i < g.entries.size(); ++i)
          used[g.entries[i].resource] += amount[s][g.offset + i];
    return used;
  }
};

inline void check_bid_layout(const Market& market, const BidTensor& bids) {
  if (bids.spend.size() != market.provider_count())
    throw InvalidArgument("bid tensor does not match the number of providers");
  for (std::size_t s = 0; s < market.provider_count(); ++s)
    if (bids.spend[s].size() != market.providers[s].entry_count)
      throw InvalidArgument("bid tensor does not match provider '" + market.providers[s].name + "'");
}

/// Prices p_j = total bids on resource j.
inline PriceVector tp_prices(const Market& market, const BidTensor& bids) {
  check_bid_layout(market, bids);
  PriceVector prices{std::vector<double>(market.resource_count(), 0.0)};
  for (std::size_t s = 0; s < market.provider_count(); ++s)
    for (const auto& g : market.providers[s].groups)
      for (std::size_t i = 0; i < g.entries.size(); ++i)
        prices[g.entries[i].resource] += bids.spend[s][g.offset + i];
  return prices;
}

struct TradingPostOutcome {
  PriceVector prices;
  Allocation allocation;
};

/// Trading-Post clearing: price = total bids, each bidder receives its bid share.
/// Resources nobody bids on stay unpriced and unallocated.
inline TradingPostOutcome tp_allocate(const BidTensor& bids, const Market& market) {
  for (const auto& row : bids.spend)
    for (double b : row)
      if (!(b >= 0.0)) throw InvalidArgument("tp_allocate: negative bid");
  TradingPostOutcome out{tp_prices(market, bids), {}};
  std::vector<std::vector<double>> amounts;
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    const auto& p = market.providers[s];
    std::vector<double> x(p.entry_count, 0.0);
    for (const auto& g : p.groups)
      for (std::size_t i = 0; i < g.entries.size(); ++i) {
        const double price = out.prices[g.entries[i].resource];
        x[g.offset + i] = price > 0.0 ? bids.spend[s][g.offset + i] / price : 0.0;
      }
    amounts.push_back(std::move(x));
  }
  out.allocation = Allocation::from_amounts(market, std::move(amounts));
  return out;
}

}  // namespace fishermarket
