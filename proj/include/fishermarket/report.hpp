#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fishermarket/equilibrium.hpp"
#include "fishermarket/trading_post.hpp"
#include "fishermarket/utility.hpp"

namespace fishermarket {

enum class Method { dynamics, tatonnement, dual_subgradient, closed_form, interior_point };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::dynamics: return "dynamics";
    case Method::tatonnement: return "tatonnement";
    case Method::dual_subgradient: return "dual-subgradient";
    case Method::closed_form: return "closed-form";
    case Method::interior_point: return "interior-point";
  }
  return "unknown";
}

/// Everything a solver hands back: the allocation, the supporting prices, and
/// how far the pair is from a market equilibrium.
struct SolveReport {
  Method method = Method::closed_form;
  Allocation allocation;
  PriceVector prices;
  BidTensor bids;                 // empty unless the method works in bid space
  std::vector<double> utilities;  // degree-one SP utilities
  std::vector<double> spending;   // p . x_s
  std::size_t iterations = 0;
  bool converged = false;
  bool surrogate = false;  // alpha = 0 providers solved through a smoothed stand-in
  std::optional<EquilibriumCheck> residuals;  // absent for schemes that are not market outcomes

  // Sampled every `trace_stride` iterations plus the final one.
  std::vector<std::size_t> trace_iterations;
  std::vector<double> potential_trace;
  std::vector<PriceVector> price_trace;
  double dual_value = 0.0;

  std::vector<std::string> warnings;
};

/// Fills utilities and spending; prices may be empty for non-market schemes.
inline void fill_utilities(SolveReport& report, const Market& market) {
  report.utilities.clear();
  for (std::size_t s = 0; s < market.provider_count(); ++s)
    report.utilities.push_back(sp_utility_homog(market, s, report.allocation.rate[s]));
  report.spending.clear();
  if (report.prices.size() == market.resource_count())
    report.spending = provider_spending(market, report.allocation, report.prices);
}

/// Fills utilities, spending and equilibrium residuals from allocation and prices.
inline void finalize_report(SolveReport& report, const Market& market) {
  fill_utilities(report, market);
  report.residuals = verify_equilibrium(report.allocation, report.prices, market);
}

inline std::vector<std::string> inactive_resource_warnings(const Market& market) {
  std::vector<std::string> out;
  for (const auto& r : market.resources)
    if (!r.active)
      out.push_back("resource '" + r.name + "' at cell '" + market.cell_ids[r.cell] +
                    "' is not demanded by any provider; left unpriced");
  return out;
}

}  // namespace fishermarket
