#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fishermarket/best_response.hpp"
#include "fishermarket/error.hpp"
#include "fishermarket/scenario.hpp"
#include "fishermarket/utility.hpp"

// Primal-dual interior-point method for the rate-space programs
//   maximize  sum_s c_s f_s(u_s)   s.t.  sum_{s,g} u_sg d'_gj <= 1,  u >= 0
// with f_s = log U_s (Eisenberg-Gale) or f_s = U_s (utilitarian), U_s the
// degree-one aggregator. A max-min provider has rates u_g = w_g z_s and a
// single variable z_s, which makes min u/w exact and smooth.

namespace fishermarket {

enum class RateObjective { log_utility, utility };

struct BarrierOptions {
  double gap_tolerance = 1e-12;  // on the mean complementarity product and the scaled dual residual
  std::size_t max_newton_steps = 500;
};

struct BarrierResult {
  std::vector<std::vector<double>> rates;  // per provider, per group
  std::vector<double> prices;              // capacity multipliers per market resource
  double objective = 0.0;
  double dual_bound = 0.0;  // utilitarian form only: certified upper bound on the optimum
  std::size_t newton_steps = 0;
  bool converged = false;
};

namespace detail {

struct RateBlock {
  std::size_t provider = 0;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool max_min = false;
  double coefficient = 0.0;
};

class RateProgram {
 public:
  RateProgram(const Market& market, std::vector<double> coefficients, RateObjective objective)
      : market_(market), objective_(objective) {
    std::size_t vars = 0;
    for (std::size_t s = 0; s < market.provider_count(); ++s) {
      const auto& p = market.providers[s];
      if (p.groups.empty() || coefficients[s] == 0.0) continue;
      RateBlock b{s, vars, is_max_min(p.alpha) ? 1 : p.groups.size(), is_max_min(p.alpha), coefficients[s]};
      vars += b.size;
      blocks_.push_back(b);
    }
    std::vector<std::vector<double>> cols(vars, std::vector<double>(market.resource_count(), 0.0));
    for (const auto& b : blocks_) {
      const auto& p = market.providers[b.provider];
      for (std::size_t g = 0; g < p.groups.size(); ++g) {
        const std::size_t v = b.offset + (b.max_min ? 0 : g);
        const double scale = b.max_min ? p.groups[g].weight : 1.0;
        for (const auto& e : p.groups[g].entries) cols[v][e.resource] += scale * e.demand;
      }
    }
    for (std::size_t j = 0; j < market.resource_count(); ++j) {
      bool used = false;
      for (std::size_t v = 0; v < vars; ++v) used = used || cols[v][j] > 0.0;
      if (used) rows_.push_back(j);
    }
    A_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(vars));
    for (std::size_t r = 0; r < rows_.size(); ++r)
      for (std::size_t v = 0; v < vars; ++v) A_(r, v) = cols[v][rows_[r]];
  }

  std::size_t variables() const { return static_cast<std::size_t>(A_.cols()); }
  std::size_t constraints() const { return rows_.size(); }
  const Eigen::MatrixXd& matrix() const { return A_; }
  const std::vector<std::size_t>& rows() const { return rows_; }
  const std::vector<RateBlock>& blocks() const { return blocks_; }

  std::vector<double> rates_of(const RateBlock& b, const Eigen::VectorXd& v) const {
    const auto& p = market_.providers[b.provider];
    std::vector<double> u(p.groups.size());
    for (std::size_t g = 0; g < u.size(); ++g)
      u[g] = b.max_min ? p.groups[g].weight * v[static_cast<Eigen::Index>(b.offset)]
                       : v[static_cast<Eigen::Index>(b.offset + g)];
    return u;
  }

  /// Objective value; when grad/hess are given, adds the derivatives of the objective to them.
  double evaluate(const Eigen::VectorXd& v, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
    double total = 0.0;
    for (const auto& b : blocks_) {
      const auto& p = market_.providers[b.provider];
      const auto off = static_cast<Eigen::Index>(b.offset);
      if (b.max_min) {
        const double z = v[off];
        const bool log_form = objective_ == RateObjective::log_utility;
        total += b.coefficient * (log_form ? std::log(z) : z);
        if (grad) (*grad)[off] += b.coefficient * (log_form ? 1.0 / z : 1.0);
        if (hess && log_form) (*hess)(off, off) -= b.coefficient / (z * z);
        continue;
      }
      const auto u = rates_of(b, v);
      const auto w = provider_weights(p);
      const double log_u = log_sp_utility_homog(u, w, p.alpha);
      // theta_i = w_i u_i^rho / sum_k w_k u_k^rho, with rho = 1 - alpha (w / sum w at alpha = 1)
      const double rho = 1.0 - p.alpha;
      std::vector<double> logs(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) logs[i] = std::log(w[i]) + rho * std::log(u[i]);
      const double norm = log_sum_exp(logs);
      std::vector<double> theta(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) theta[i] = std::exp(logs[i] - norm);

      if (objective_ == RateObjective::log_utility) {
        total += b.coefficient * log_u;
        for (std::size_t i = 0; i < u.size(); ++i) {
          const auto a = off + static_cast<Eigen::Index>(i);
          if (grad) (*grad)[a] += b.coefficient * theta[i] / u[i];
          if (!hess) continue;
          for (std::size_t k = 0; k < u.size(); ++k) {
            double h = -rho * theta[i] * theta[k];
            if (i == k) h -= p.alpha * theta[i];
            (*hess)(a, off + static_cast<Eigen::Index>(k)) += b.coefficient * h / (u[i] * u[k]);
          }
        }
      } else {
        const double U = std::exp(log_u);
        total += b.coefficient * U;
        for (std::size_t i = 0; i < u.size(); ++i) {
          const auto a = off + static_cast<Eigen::Index>(i);
          if (grad) (*grad)[a] += b.coefficient * U * theta[i] / u[i];
          if (!hess) continue;
          for (std::size_t k = 0; k < u.size(); ++k) {
            double h = p.alpha * theta[i] * theta[k];
            if (i == k) h -= p.alpha * theta[i];
            (*hess)(a, off + static_cast<Eigen::Index>(k)) += b.coefficient * U * h / (u[i] * u[k]);
          }
        }
      }
    }
    return total;
  }

 private:
  const Market& market_;
  RateObjective objective_;
  std::vector<RateBlock> blocks_;
  std::vector<std::size_t> rows_;
  Eigen::MatrixXd A_;

  static double log_sum_exp(const std::vector<double>& t) { return fishermarket::detail::log_sum_exp(t); }
};

}  // namespace detail

/// Weak-duality bound for max sum c_s U_s s.t. A u <= 1. With multipliers y >= 0
/// the Lagrangian is bounded iff c_s M_s(y) <= 1 for every s, where M_s(y) is the
/// largest U_s affordable at unit cost; rescaling y to meet that gives sum y.
inline double utilitarian_dual_bound(const Market& market, const std::vector<double>& coefficients,
                                     const std::vector<std::size_t>& rows, const Eigen::VectorXd& y) {
  PriceVector prices;
  prices.values.assign(market.resource_count(), 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) prices.values[rows[r]] = y[static_cast<Eigen::Index>(r)];
  double worst = 0.0;
  for (std::size_t s = 0; s < market.provider_count(); ++s) {
    const auto& p = market.providers[s];
    if (p.groups.empty() || coefficients[s] == 0.0) continue;
    const double unit = std::exp(best_response_log_utility(prices, market, s) - std::log(p.budget));
    worst = std::max(worst, coefficients[s] * unit);
  }
  return worst * y.sum();
}

/// Solves the rate program for the providers with nonzero coefficient.
inline BarrierResult solve_rate_program(const Market& market, const std::vector<double>& coefficients,
                                        RateObjective objective, const BarrierOptions& options = {}) {
  if (coefficients.size() != market.provider_count())
    throw InvalidArgument("rate program: one coefficient per provider expected");
  for (double c : coefficients)
    if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("rate program: coefficients must be nonnegative");

  detail::RateProgram prog(market, coefficients, objective);
  BarrierResult result;
  result.prices.assign(market.resource_count(), 0.0);
  result.rates.resize(market.provider_count());
  for (std::size_t s = 0; s < market.provider_count(); ++s)
    result.rates[s].assign(market.providers[s].groups.size(), 0.0);
  const std::size_t n = prog.variables();
  if (n == 0) {
    result.converged = true;
    return result;
  }
  const auto& A = prog.matrix();
  const auto rows = A.rows();
  const auto cols = A.cols();

  // Uniform start at half the tightest capacity.
  const double heaviest = A.rowwise().sum().maxCoeff();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(cols, 0.5 / heaviest);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(rows) - A * v;
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(rows);
  Eigen::VectorXd mu = Eigen::VectorXd::Ones(cols);

  // The utilitarian objective is degree one; rescale it to order one at full load.
  double scale = 1.0;
  if (objective == RateObjective::utility) {
    const double full = prog.evaluate(v * 2.0, nullptr, nullptr);
    if (!(full > 0.0)) throw InvalidArgument("rate program: objective vanishes at a feasible point");
    scale = 1.0 / full;
  }

  // Primal-dual path following on
  //   -scale grad f(v) + A' lambda - mu = 0,  A v + s = 1,  lambda s = mu v = sigma tau.
  // Slacks are carried as variables so tiny slacks keep full relative precision.
  const double pairs = static_cast<double>(rows + cols);
  while (result.newton_steps < options.max_newton_steps) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(cols);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(cols, cols);
    prog.evaluate(v, &grad, &hess);
    const Eigen::VectorXd r_dual = -scale * grad + A.transpose() * lambda - mu;
    const Eigen::VectorXd r_primal = A * v + s - Eigen::VectorXd::Ones(rows);
    const double tau = (lambda.dot(s) + mu.dot(v)) / pairs;
    const double dual_scale = 1.0 + (scale * grad).cwiseAbs().maxCoeff();
    if (objective == RateObjective::utility && tau < options.gap_tolerance) {
      const double bound = utilitarian_dual_bound(market, coefficients, prog.rows(), lambda / scale);
      const double value = prog.evaluate(v, nullptr, nullptr);
      if (bound - value <= options.gap_tolerance * std::max(bound, 1e-300)) {
        result.converged = true;
        break;
      }
    }
    if (tau < options.gap_tolerance && r_dual.cwiseAbs().maxCoeff() < options.gap_tolerance * dual_scale &&
        r_primal.cwiseAbs().maxCoeff() < 1e-14) {
      result.converged = true;
      break;
    }
    ++result.newton_steps;

    const double target = 0.1 * tau;
    Eigen::MatrixXd K = -scale * hess;
    K += A.transpose() * (lambda.cwiseQuotient(s)).asDiagonal() * A;
    K.diagonal() += mu.cwiseQuotient(v);
    const Eigen::VectorXd inner = lambda.cwiseQuotient(s).cwiseProduct(r_primal - s) + s.cwiseInverse() * target;
    const Eigen::VectorXd rhs = -r_dual - A.transpose() * inner + v.cwiseInverse() * target - mu;
    const Eigen::VectorXd dv = K.ldlt().solve(rhs);
    const Eigen::VectorXd dlambda = lambda.cwiseQuotient(s).cwiseProduct(A * dv + r_primal - s) + s.cwiseInverse() * target;
    const Eigen::VectorXd ds = -r_primal - A * dv;
    const Eigen::VectorXd dmu = v.cwiseInverse() * target - mu - mu.cwiseQuotient(v).cwiseProduct(dv);
    if (!dv.allFinite() || !dlambda.allFinite()) break;

    double len = 1.0;
    const auto limit = [&len](const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (dx[i] < 0.0) len = std::min(len, -0.995 * x[i] / dx[i]);
    };
    limit(v, dv);
    limit(s, ds);
    limit(lambda, dlambda);
    limit(mu, dmu);
    // Backtrack on the perturbed KKT residual; the objective is nonlinear, so full steps can overshoot.
    const auto residual = [&](const Eigen::VectorXd& v1, const Eigen::VectorXd& s1, const Eigen::VectorXd& l1,
                              const Eigen::VectorXd& m1) {
      Eigen::VectorXd g1 = Eigen::VectorXd::Zero(cols);
      prog.evaluate(v1, &g1, nullptr);
      const double rd = (-scale * g1 + A.transpose() * l1 - m1).squaredNorm();
      const double rp = (A * v1 + s1 - Eigen::VectorXd::Ones(rows)).squaredNorm();
      const double rc = (l1.cwiseProduct(s1).array() - target).matrix().squaredNorm() +
                        (m1.cwiseProduct(v1).array() - target).matrix().squaredNorm();
      return rd + rp + rc;
    };
    const double before = residual(v, s, lambda, mu);
    for (int k = 0; k < 40; ++k) {
      if (residual(v + len * dv, s + len * ds, lambda + len * dlambda, mu + len * dmu) <= (1.0 - 1e-4 * len) * before)
        break;
      len *= 0.5;
    }
    v += len * dv;
    s += len * ds;
    lambda += len * dlambda;
    mu += len * dmu;
  }

  for (std::size_t r = 0; r < prog.rows().size(); ++r)
    result.prices[prog.rows()[r]] = lambda[static_cast<Eigen::Index>(r)] / scale;
  for (const auto& b : prog.blocks()) result.rates[b.provider] = prog.rates_of(b, v);
  result.objective = prog.evaluate(v, nullptr, nullptr);
  if (objective == RateObjective::utility)
    result.dual_bound = utilitarian_dual_bound(market, coefficients, prog.rows(), lambda / scale);
  return result;
}

}  // namespace fishermarket
