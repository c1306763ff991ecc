// Acceptance harness: prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fishermarket/fishermarket.hpp"

using namespace fishermarket;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  const std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n, double total) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (auto& x : v) sum += (x = e(rng));
  for (auto& x : v) x *= total / sum;
  return v;
}

// Random budget-feasible bids. An alpha = 1 provider's feasible set fixes each
// class's total at B w / sum w, so only the split inside a class is random.
BidTensor random_bids(std::mt19937_64& rng, const Market& market) {
  BidTensor b;
  for (const auto& p : market.providers) {
    if (p.alpha != 1.0) {
      b.spend.push_back(random_simplex(rng, p.entry_count, p.budget));
      continue;
    }
    std::vector<double> spend(p.entry_count);
    for (const auto& g : p.groups) {
      const auto part = random_simplex(rng, g.entries.size(), p.budget * g.weight / p.total_weight());
      std::copy(part.begin(), part.end(), spend.begin() + static_cast<std::ptrdiff_t>(g.offset));
    }
    b.spend.push_back(std::move(spend));
  }
  return b;
}

std::vector<double> budgets_of(const Market& m) {
  std::vector<double> b;
  for (const auto& p : m.providers) b.push_back(p.budget);
  return b;
}

Market complementary_random(std::uint64_t seed) { return normalize_scenario(random_scenario(seed)); }

Market preset_instance(std::size_t i, double alpha) {
  LoadModel lm;
  lm.seed = 2024;
  return normalize_scenario(set_alpha(generate_instance(paper_preset(), lm, i), alpha));
}

// 1. Equilibrium certificate on random instances.
Outcome criterion1() {
  const auto t0 = Clock::now();
  std::size_t fails = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto m = complementary_random(1000 + seed);
    const auto r = solve_eg(m);
    const auto c = verify_equilibrium(r.allocation, r.prices, m);
    worst = std::max({worst, c.budget_gap, c.clearing_gap, c.br_gap});
    if (!c.holds(1e-6)) ++fails;
  }
  const double t = seconds_since(t0);
  return {fails == 0 && t <= 60.0,
          std::to_string(fails) + "/100 failures, worst gap " + fmt("%.2e", worst) + ", " + fmt("%.2f", t) + " s"};
}

// 2. O(1/T) potential gap against a long reference run.
Outcome criterion2() {
  std::atomic<std::size_t> violations{0};
  std::vector<double> worst_ratio(20, 0.0);
  parallel_for(20, [&](std::size_t i) {
    const auto m = complementary_random(2000 + i);
    DynamicsConfig ref;
    ref.max_iterations = 100000;
    ref.tolerance = std::numeric_limits<double>::min();
    ref.trace_stride = 0;
    const auto star = run_dynamics(m, ref).bids;
    const double phi_star = eval_potential(star, m).phi_total;
    const double dg = bregman_divergence(star, uniform_bids(m), m);
    for (std::size_t T : {10u, 100u, 1000u}) {
      DynamicsConfig cfg;
      cfg.max_iterations = T;
      cfg.tolerance = std::numeric_limits<double>::min();
      cfg.trace_stride = 0;
      const double gap = eval_potential(run_dynamics(m, cfg).bids, m).phi_total - phi_star;
      const double bound = dg / static_cast<double>(T);
      if (gap > bound + 1e-8) ++violations;
      if (bound > 0) worst_ratio[i] = std::max(worst_ratio[i], gap / bound);
    }
  });
  double worst = 0.0;
  for (double r : worst_ratio) worst = std::max(worst, r);
  return {violations == 0, std::to_string(violations.load()) + "/60 violations, max gap/bound " + fmt("%.3f", worst)};
}

// 3. Bregman sandwich and gradient check.
Outcome criterion3() {
  const std::vector<std::pair<std::string, std::vector<double>>> regimes = {
      {"1", {1.0}}, {"(1,inf)", {1.5, 2.0, 5.0}}, {"inf", {kInfiniteAlpha}}, {"mixed", {1.0, 2.0, kInfiniteAlpha}}};
  std::size_t bad = 0, grad_bad = 0;
  double worst_lower = HUGE_VAL, worst_upper = HUGE_VAL, worst_grad = 0.0;
  for (std::size_t k = 0; k < regimes.size(); ++k) {
    RandomFamily fam;
    fam.alphas = regimes[k].second;
    std::mt19937_64 rng(30 + k);
    for (int i = 0; i < 1000; ++i) {
      const auto m = normalize_scenario(random_scenario(3000 + 1000 * k + i / 50, fam));
      const auto gap = bregman_gap(random_bids(rng, m), random_bids(rng, m), m);
      worst_lower = std::min(worst_lower, gap.lower_gap);
      worst_upper = std::min(worst_upper, gap.upper_gap);
      if (gap.lower_gap < -1e-10 || gap.upper_gap < -1e-10) ++bad;
    }
    for (int i = 0; i < 10; ++i) {
      const auto m = normalize_scenario(random_scenario(3500 + 1000 * k + i, fam));
      const auto b = random_bids(rng, m);
      const auto grad = potential_gradient(b, m);
      for (std::size_t s = 0; s < m.provider_count(); ++s)
        for (std::size_t j = 0; j < b.spend[s].size(); ++j) {
          const double h = 1e-4 * b.spend[s][j];  // central differences, step scaled to the bid
          auto up = b, down = b;
          up.spend[s][j] += h;
          down.spend[s][j] -= h;
          const double fd = (eval_potential(up, m).phi_total - eval_potential(down, m).phi_total) / (2 * h);
          const double rel = std::abs(fd - grad.spend[s][j]) / std::max(1.0, std::abs(fd));
          worst_grad = std::max(worst_grad, rel);
          if (rel > 1e-5) ++grad_bad;
        }
    }
  }
  return {bad == 0 && grad_bad == 0, std::to_string(bad) + "/4000 sandwich violations (min lower " +
                                         fmt("%.1e", worst_lower) + ", min upper " + fmt("%.1e", worst_upper) +
                                         "), gradient max rel err " + fmt("%.1e", worst_grad)};
}

// Bid dynamics run to a fixed point, stopping before any price underflows:
// slack resources have zero equilibrium price, where the dual is undefined.
BidTensor last_positive_price_iterate(const Market& m) {
  BidTensor b;
  const PriceVector flat{std::vector<double>(m.resource_count(), 1.0)};
  for (std::size_t s = 0; s < m.provider_count(); ++s) b.spend.push_back(bid_update(flat, m, s));
  for (int t = 0; t < 100000; ++t) {
    const auto p = tp_prices(m, b);
    BidTensor next;
    for (std::size_t s = 0; s < m.provider_count(); ++s) next.spend.push_back(bid_update(p, m, s));
    const auto q = tp_prices(m, next);
    if (*std::min_element(q.values.begin(), q.values.end()) <= std::numeric_limits<double>::min()) break;
    const double change = max_relative_change(p, q, {});
    b = std::move(next);
    if (change <= 1e-16) break;
  }
  return b;
}

// 4. Dual equals potential at the fixed point and bounds it below elsewhere.
Outcome criterion4() {
  std::size_t bad_eq = 0, bad_ineq = 0;
  double worst_eq = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = complementary_random(4000 + seed);
    const auto star = last_positive_price_iterate(m);
    const double diff = std::abs(eval_dual(tp_prices(m, star), m) - eval_potential(star, m).phi_total);
    worst_eq = std::max(worst_eq, diff);
    if (diff > 1e-8) ++bad_eq;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 200; ++i) {
      const auto b = random_bids(rng, m);
      if (eval_dual(tp_prices(m, b), m) > eval_potential(b, m).phi_total + 1e-12) ++bad_ineq;
    }
  }
  return {bad_eq == 0 && bad_ineq == 0, "max |dual - potential| at fixed point " + fmt("%.1e", worst_eq) + ", " +
                                            std::to_string(bad_ineq) + "/4000 ordering violations"};
}

// 5. Bid update is the best response.
Outcome criterion5() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    RandomFamily fam;
    const double alpha = i % 10 == 9 ? kInfiniteAlpha : 1.0 + 99.0 * unit(rng) * unit(rng);
    fam.alphas = {alpha};
    const auto m = normalize_scenario(random_scenario(5000 + i, fam));
    PriceVector p;
    for (std::size_t j = 0; j < m.resource_count(); ++j) p.values.push_back(1e-3 + unit(rng));
    for (std::size_t s = 0; s < m.provider_count(); ++s) {
      const auto a = bid_update(p, m, s), b = best_response(p, m, s);
      for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    }
  }
  return {worst <= 1e-10, "max coordinate difference " + fmt("%.1e", worst) + " over 1000 price vectors"};
}

// 6. Equilibrium dominates static sharing per provider.
Outcome criterion6() {
  const std::vector<double> alphas{1.0, 2.0, 3.0, 5.0};
  std::vector<double> worst(100 * alphas.size(), 0.0);
  std::atomic<std::size_t> bad{0};
  parallel_for(worst.size(), [&](std::size_t k) {
    const auto m = preset_instance(k / alphas.size(), alphas[k % alphas.size()]);
    const auto me = solve_eg(m), ss = static_share(m);
    for (std::size_t s = 0; s < m.provider_count(); ++s) {
      const double shortfall = (ss.utilities[s] - me.utilities[s]) / ss.utilities[s];
      worst[k] = std::max(worst[k], shortfall);
      if (shortfall > 1e-8) ++bad;
    }
  });
  double w = -1.0;
  for (double v : worst) w = std::max(w, v);
  return {bad == 0, std::to_string(bad.load()) + " provider violations over 400 solves; max relative (SS - ME)/SS " +
                        fmt("%.2e", w)};
}

// 7. Price-of-anarchy bound.
Outcome criterion7() {
  const std::vector<double> equal3{1.0, 1.0, 1.0};
  const double b3 = thm4_bound(equal3);
  const bool arithmetic = std::abs(b3 - 0.17863) <= 1e-5;
  const std::vector<double> alphas{0.0, 1.0, 2.0, 5.0, kInfiniteAlpha};
  const std::size_t n = 100 * alphas.size();
  std::vector<int> status(n, 0);  // 0 skipped, 1 ok, 2 violation
  std::vector<double> slack(n, 1.0);
  parallel_for(n, [&](std::size_t k) {
    const auto m = preset_instance(k / alphas.size(), alphas[k % alphas.size()]);
    const auto rep = compare_schemes(m);
    if (!rep.so.converged) return;
    status[k] = rep.poa_value <= rep.poa_bound ? 1 : 2;
    slack[k] = rep.poa_bound - rep.poa_value;
  });
  std::size_t checked = 0, bad = 0;
  double min_slack = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    checked += status[k] != 0;
    bad += status[k] == 2;
    if (status[k]) min_slack = std::min(min_slack, slack[k]);
  }
  return {arithmetic && bad == 0 && checked > 0,
          "equal-U bound S=3 " + fmt("%.6f", b3) + "; " + std::to_string(bad) + " violations on " +
              std::to_string(checked) + " preset solves with converged SO, min slack " + fmt("%.3f", min_slack)};
}

// 8. Equilibrium maximizes Nash welfare.
Outcome criterion8() {
  std::atomic<std::size_t> bad{0};
  parallel_for(20, [&](std::size_t i) {
    const auto m = complementary_random(8000 + i);
    const auto b = budgets_of(m);
    const double me = nash_welfare(solve_eg(m).utilities, b);
    std::mt19937_64 rng(i);
    for (int k = 0; k < 500; ++k) {
      const auto out = tp_allocate(random_bids(rng, m), m);
      std::vector<double> u;
      for (std::size_t s = 0; s < m.provider_count(); ++s) u.push_back(sp_utility_homog(m, s, out.allocation.rate[s]));
      bool positive = true;
      for (double v : u) positive = positive && v > 0.0;
      if (positive && nash_welfare(u, b) > me) ++bad;
    }
  });
  return {bad == 0, std::to_string(bad.load()) + "/10000 random allocations beat the equilibrium"};
}

// 9 and 11 share one batch.
ResultSet shared_batch() {
  ExperimentConfig c;
  c.instances = 100;
  c.alphas = {1.0, 2.0, 3.0, 4.0, 5.0};
  c.schemes = {Scheme::me};
  c.budget_sweep.alphas = {1.0, 2.0, 3.0};
  c.trace.enabled = false;
  c.jobs = std::max(1u, std::thread::hardware_concurrency());
  return run_experiment(c);
}

Outcome criterion9(const ResultSet& batch) {
  std::map<std::string, std::vector<std::pair<double, double>>> by_sp;
  for (const auto& g : class_gaps(batch.rows, Scheme::me)) by_sp[g.sp].push_back({g.alpha, g.gap.mean});
  std::size_t big = 0, single = 0;
  std::string trail;
  for (auto& [sp, series] : by_sp) {
    std::sort(series.begin(), series.end());
    trail += " " + sp + ":";
    for (std::size_t k = 0; k < series.size(); ++k) {
      trail += fmt(k ? ">%.3g" : "%.3g", series[k].second);
      if (k == 0) continue;
      const double rise = series[k].second - series[k - 1].second;
      if (rise > 1e-6) ++big;
      else if (rise > 0) ++single;
    }
  }
  std::size_t unconverged = 0;
  for (const auto& r : batch.rows) unconverged += !r.converged;
  return {big == 0 && unconverged == 0, std::to_string(big) + " increases above 1e-6, " + std::to_string(single) +
                                            " tiny;" + trail + "; unconverged rows " + std::to_string(unconverged)};
}

Outcome criterion10() {
  const auto m = preset_instance(0, 1.0);
  std::vector<std::size_t> cell2;
  for (std::size_t j = 0; j < m.resource_count(); ++j)
    if (m.cell_ids[m.resources[j].cell] == "2") cell2.push_back(j);
  DynamicsConfig trace;
  trace.max_iterations = 200;
  trace.tolerance = std::numeric_limits<double>::min();
  const auto r = run_dynamics(m, trace);
  std::size_t first = 0;
  for (std::size_t k = 1; k < r.price_trace.size() && !first; ++k)
    if (max_relative_change(r.price_trace[k - 1], r.price_trace[k], cell2) < 1e-4) first = r.trace_iterations[k];
  const auto t0 = Clock::now();
  const auto full = run_dynamics(m);
  const double t = seconds_since(t0);
  return {first != 0 && t <= 1.0 && full.converged,
          "cell-2 change < 1e-4 at iteration " + std::to_string(first) + "; full run " +
              std::to_string(full.iterations) + " iterations in " + fmt("%.3f", t) + " s"};
}

Outcome criterion11(const ResultSet& batch) {
  std::map<double, std::vector<std::pair<double, double>>> by_alpha;
  for (const auto& s : sensitivity_summary(batch.sweep))
    if (s.sp == "SP1") by_alpha[s.alpha].push_back({s.fraction, s.rate.mean});
  bool ok = by_alpha.size() == 3;
  std::string detail;
  for (const auto& [alpha, pts] : by_alpha) {
    const double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& [x, y] : pts) sx += x, sy += y, sxx += x * x, sxy += x * y, syy += y * y;
    const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
    const double r2 = cov * cov / (vx * vy);
    ok = ok && pts.size() == 9 && r2 >= 0.98;
    detail += " alpha=" + alpha_label(alpha) + " R2=" + fmt("%.4f", r2);
  }
  return {ok, "SP1 mean rate vs budget share:" + detail};
}

Outcome criterion12(const std::string& cli, const std::string& work) {
  if (cli.empty()) return {false, "no CLI path given (--cli)"};
  std::filesystem::create_directories(work);
  const std::string config = work + "/determinism.json";
  write_text_file(config, R"({"instances": 12, "alphas": [0, 1, 2.5, "inf"], "seed": 99,
    "budget_sweep": {"fractions": [0.25, 0.75], "alphas": [2]}, "trace": {"iterations": 30}})");
  const auto run = [&](const std::string& tag, int jobs) {
    const std::string cmd = "\"" + cli + "\" experiment --config \"" + config + "\" --jobs " + std::to_string(jobs) +
                            " --out \"" + work + "/" + tag + "\" 2>/dev/null";
    return std::system(cmd.c_str()) == 0;
  };
  const auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  if (!run("j1a", 1) || !run("j1b", 1) || !run("j8a", 8) || !run("j8b", 8)) return {false, "CLI run failed"};
  bool same = true;
  std::size_t files = 0;
  for (const char* f : {"results.csv", "budget_sweep.csv", "plots/welfare.csv", "plots/alpha_effect.csv",
                        "plots/class_gap.csv", "plots/sensitivity.csv", "plots/price_trace.csv"}) {
    const auto ref = slurp(work + "/j1a/" + f);
    same = same && !ref.empty();
    for (const char* tag : {"j1b", "j8a", "j8b"}) same = same && slurp(work + "/" + tag + "/" + f) == ref;
    ++files;
  }
  return {same, std::to_string(files) + " CSV files byte-identical across jobs=1 and jobs=8 runs: " + (same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli, work = "acceptance_work";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") cli = argv[i + 1];
    else if (flag == "--work") work = argv[i + 1];
  }
  const std::vector<std::string> names = {
      "ME certificate on 100 random instances",     "O(1/T) potential convergence bound",
      "Bregman sandwich and gradient check",        "dual/potential duality",
      "bid update equals best response",            "ME dominates SS per provider",
      "PoA within bound",                           "ME maximizes Nash welfare",
      "class-gap shrinks with alpha",               "cell-2 price convergence",
      "budget-sensitivity linearity",               "experiment determinism across jobs"};
  int failures = 0;
  const auto report = [&](int k, const std::function<Outcome()>& fn) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", k, names[k - 1].c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  };
  report(1, criterion1);
  report(2, criterion2);
  report(3, criterion3);
  report(4, criterion4);
  report(5, criterion5);
  report(6, criterion6);
  report(7, criterion7);
  report(8, criterion8);
  ResultSet batch;
  std::string batch_error;
  try {
    batch = shared_batch();
  } catch (const std::exception& e) {
    batch_error = e.what();
  }
  report(9, [&] { return batch_error.empty() ? criterion9(batch) : Outcome{false, batch_error}; });
  report(10, criterion10);
  report(11, [&] { return batch_error.empty() ? criterion11(batch) : Outcome{false, batch_error}; });
  report(12, [&] { return criterion12(cli, work); });
  std::printf("%d/12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}
