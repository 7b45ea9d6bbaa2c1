// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "huberloc/dataio.hpp"

using namespace huberloc;

namespace
{

constexpr std::uint64_t kMasterSeed = 20240601;
constexpr std::size_t kRuns = 100;

int failures = 0;

void report(int id, bool pass, const std::string& detail)
{
  if (!pass)
    ++failures;
  fmt::print("criterion {}: {}  {}\n", id, pass ? "PASS" : "FAIL", detail);
  std::fflush(stdout);
}

double median_of(const RunReport& r) { return r.median; }

// One-sided exact sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
double sign_test_p(std::size_t wins, std::size_t losses)
{
  const std::size_t n = wins + losses;
  double p = 0.0;
  for (std::size_t k = wins; k <= n; ++k)
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  return p;
}

// ---------------------------------------------------------------------------

void gradient_check()
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> coord(-10.0, 10.0), range(-2.0, 15.0), knee(0.05, 3.0);
  const double h = 1e-6;
  double worst = 0.0;
  int checked = 0;
  while (checked < 1000)
  {
    const Position xi{coord(rng), coord(rng)}, xj{coord(rng), coord(rng)};
    const double r = range(rng), k = knee(rng);
    const double u = residual(xi, xj, r);
    if (distance(xi, xj) < 1e-4 || std::abs(u) < 1e-4 || std::abs(std::abs(u) - k) < 1e-4)
      continue;
    ++checked;
    for (LossKind kind : {LossKind::Nls, LossKind::RelaxedNls, LossKind::Huber, LossKind::RelaxedHuber})
    {
      auto f = [&](Position x) { return link_cost(kind, {k}, residual(x, xj, r)); };
      const Position fd{(f(xi + Position{h, 0}) - f(xi - Position{h, 0})) / (2 * h),
                        (f(xi + Position{0, h}) - f(xi - Position{0, h})) / (2 * h)};
      const Position g = link_grad(kind, {k}, xi, xj, r);
      const double err = norm(g) == 0.0 ? norm(fd) : norm(g - fd) / norm(g);
      worst = std::max(worst, err);
    }
  }
  report(1, worst < 1e-5, fmt::format("worst relative error {:.2e} over {} configurations x 4 losses", worst, checked));
}

void convexity_check()
{
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 10.0), c(-5.0, 15.0);
  std::vector<Position> pts;
  for (int k = 0; k < 10; ++k)
    pts.push_back({u(rng), u(rng)});
  for (Position a : {Position{0, 0}, Position{10, 0}, Position{10, 10}, Position{0, 10}})
    pts.push_back(a);
  const Network net = build_topology(pts, 10, kFullConnectivity);
  const MeasurementSet ms = synthesize(net, {0.5, 0.5, 10.0}, 3);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n)
  {
    std::vector<Position> a(10), b(10), mid(10);
    for (std::size_t i = 0; i < 10; ++i)
    {
      a[i] = {c(rng), c(rng)};
      b[i] = {c(rng), c(rng)};
      mid[i] = 0.5 * (a[i] + b[i]);
    }
    for (LossKind kind : {LossKind::RelaxedHuber, LossKind::RelaxedNls})
    {
      const LossParams p{1.0};
      const double slack = 0.5 * (network_cost(kind, p, a, net, ms) + network_cost(kind, p, b, net, ms)) -
                           network_cost(kind, p, mid, net, ms);
      worst = std::min(worst, slack);
    }
  }
  report(2, worst >= -1e-9, fmt::format("smallest midpoint slack {:.3e} over 1000 pairs x 2 losses", worst));
}

void noise_free_check()
{
  // 20 seeded placements of 5 sensors in the 10 m square, starts uniform in a
  // 2 m disc around the truth, knees set for sigma = 0.5 m
  const double sigma = 0.5;
  std::size_t stage1_ok = 0, two_ok = 0;
  double stage1_worst = 0.0, two_worst = 0.0;
  const std::size_t instances = 20;
  for (std::size_t k = 0; k < instances; ++k)
  {
    std::mt19937_64 rng(derive_seed(kMasterSeed + 3, k));
    std::uniform_real_distribution<double> u(0.0, 10.0), unit(0.0, 1.0);
    std::vector<Position> pts;
    for (int s = 0; s < 5; ++s)
      pts.push_back({u(rng), u(rng)});
    for (Position a : {Position{0, 0}, Position{10, 0}, Position{10, 10}, Position{0, 10}})
      pts.push_back(a);
    const Network net = build_topology(pts, 5, kFullConnectivity);
    const MeasurementSet ms = synthesize(net, {0.0, 0.0, 10.0}, derive_seed(kMasterSeed + 3, 100 + k));
    std::vector<Position> init = net.true_sensor_positions();
    for (auto& p : init)
    {
      const double r = 2.0 * std::sqrt(unit(rng));
      const double t = 2.0 * std::numbers::pi * unit(rng);
      p += Position{r * std::cos(t), r * std::sin(t)};
    }
    StageConfig s1 = reference_stage1();
    s1.max_iters = 500;
    StageConfig s2 = reference_stage2();
    s2.max_iters = 500;
    const auto res = solve_two_stage(net, ms, {0, init}, s1, s2, sigma);
    const double e1 = network_error(res.stage1_state.positions, net.true_sensor_positions());
    const double e2 = network_error(res.state.positions, net.true_sensor_positions());
    stage1_ok += e1 < 1e-2;
    two_ok += e2 < 1e-3;
    stage1_worst = std::max(stage1_worst, e1);
    two_worst = std::max(two_worst, e2);
  }
  report(3, stage1_ok == instances && two_ok == instances,
         fmt::format("stage I < 1e-2 m in {}/{} (worst {:.2e}); two-stage < 1e-3 m in {}/{} (worst {:.2e})",
                     stage1_ok, instances, stage1_worst, two_ok, instances, two_worst));
}

ScenarioConfig reference_scenario(double nlos_prob)
{
  ScenarioConfig sc;
  sc.noise.nlos_prob = nlos_prob;
  sc.mc_runs = kRuns;
  return sc;
}

using Reports = std::map<Method, RunReport>;

void simulation_checks(std::size_t workers)
{
  std::map<double, Reports> by_p;
  for (double p : {0.95, 0.5, 0.05})
  {
    by_p[p] = run_monte_carlo(reference_scenario(p), all_methods(), kMasterSeed, workers);
    std::string line = fmt::format("  P_N = {:.2f} medians (m):", p);
    for (const auto& [m, r] : by_p[p])
      line += fmt::format(" {}={:.3f}", to_string(m), r.median);
    fmt::print("{}\n", line);
  }

  // 4: relaxed Huber vs relaxed NLS, raw Huber clearly worse
  {
    bool ok = true;
    std::string detail;
    for (double p : {0.95, 0.5, 0.05})
    {
      const double rh = median_of(by_p[p][Method::StageOne]);
      const double rn = median_of(by_p[p][Method::RelaxedNls]);
      const double raw = median_of(by_p[p][Method::RawHuber]);
      ok = ok && rh <= rn + 0.05;
      if (p > 0.1)
        ok = ok && raw >= rh + 0.1;
      detail += fmt::format("P_N {:.2f}: relaxed Huber {:.3f} vs relaxed NLS {:.3f}, raw Huber {:.3f}; ", p, rh, rn, raw);
    }
    for (const auto& [p, reps] : by_p)
      ok = ok && reps.at(Method::StageOne).failures == 0 && reps.at(Method::RawHuber).failures == 0;
    detail.resize(detail.size() - 2);
    report(4, ok, detail);
  }

  // 5: second stage helps at low contamination, does not hurt at high
  {
    const auto& s1 = by_p[0.05][Method::StageOne].runs;
    const auto& s2 = by_p[0.05][Method::TwoStage].runs;
    std::size_t wins = 0, losses = 0;
    for (std::size_t k = 0; k < s1.size(); ++k)
    {
      wins += s2[k].network_error < s1[k].network_error;
      losses += s2[k].network_error > s1[k].network_error;
    }
    const double pval = sign_test_p(wins, losses);
    const double lo1 = by_p[0.05][Method::StageOne].median, lo2 = by_p[0.05][Method::TwoStage].median;
    const double hi1 = by_p[0.95][Method::StageOne].median, hi2 = by_p[0.95][Method::TwoStage].median;
    const bool low_ok = lo2 < lo1 && pval < 0.05;
    const bool high_ok = hi2 <= hi1 + 0.05;
    report(5, low_ok && high_ok,
           fmt::format("P_N 0.05: stage II {:.3f} vs stage I {:.3f}, sign test {}:{} p = {:.2e} ({}); "
                       "P_N 0.95: stage II {:.3f} vs stage I {:.3f} + 0.05 ({})",
                       lo2, lo1, wins, losses, pval, low_ok ? "ok" : "not met", hi2, hi1,
                       high_ok ? "ok" : "not met"));
  }

  // 6: gap to the LOS-only oracle
  {
    const double two = by_p[0.05][Method::TwoStage].median, oracle = by_p[0.05][Method::OracleLos].median;
    report(6, two <= oracle + 0.1,
           fmt::format("P_N 0.05: two-stage {:.3f} vs LOS oracle {:.3f} + 0.1 (gap {:.3f})", two, oracle, two - oracle));
  }

  // 7: relaxed Huber vs POCS at high contamination
  {
    const double rh = by_p[0.95][Method::StageOne].median, pocs = by_p[0.95][Method::Pocs].median;
    report(7, std::abs(rh - pocs) <= 0.1,
           fmt::format("P_N 0.95: relaxed Huber {:.3f} vs POCS {:.3f} (|diff| {:.3f})", rh, pocs, std::abs(rh - pocs)));
  }

  // 8: same seed, same tables; one measurement set per run across methods
  {
    const auto grid = linear_grid(0.0, 20.0, 401);
    const Reports again = run_monte_carlo(reference_scenario(0.05), all_methods(), kMasterSeed, 1);
    bool same = true;
    for (const auto& [m, r] : again)
      same = same && cdf_table(r, grid) == cdf_table(by_p[0.05][m], grid) && r.runs == by_p[0.05][m].runs;
    bool paired = true;
    for (const auto& [p, reps] : by_p)
      for (std::size_t k = 0; k < kRuns; ++k)
        for (const auto& [m, r] : reps)
          paired = paired && r.runs[k].measurement_hash == reps.begin()->second.runs[k].measurement_hash;
    report(8, same && paired,
           fmt::format("rerun with 1 worker vs {}: CDF tables {}; measurement hashes {} across methods", workers,
                       same ? "bit-identical" : "differ", paired ? "equal" : "differ"));
  }
}

void dataset_check(std::size_t workers)
{
  const DatasetBundle bundle = make_surrogate_dataset(7);
  ScenarioConfig sc;
  sc.noise.sigma_n = bundle.sigma_n;
  sc.mc_runs = kRuns;
  const std::vector<Method> methods{Method::Pocs, Method::StageOne, Method::TwoStage};
  bool ran = true;
  std::string detail = fmt::format("{} (avg bias {:.3f} m): ", bundle.name, *bundle.avg_bias);
  double full_one = 0.0, full_two = 0.0;
  for (DebiasMode mode : {DebiasMode::Raw, DebiasMode::HalfDebiased, DebiasMode::FullDebiased})
  {
    const Problem pr = apply_debias(bundle, mode, *bundle.avg_bias, derive_seed(kMasterSeed, 0xdeb1a5));
    const Reports reps = run_reinitialized(sc, pr.net, pr.ms, methods, kMasterSeed, workers);
    for (const auto& [m, r] : reps)
      ran = ran && r.failures == 0 && r.runs.size() == kRuns;
    detail += fmt::format("{}: pocs {:.3f} stage I {:.3f} two-stage {:.3f}; ", to_string(mode),
                          reps.at(Method::Pocs).median, reps.at(Method::StageOne).median,
                          reps.at(Method::TwoStage).median);
    if (mode == DebiasMode::FullDebiased)
    {
      full_one = reps.at(Method::StageOne).median;
      full_two = reps.at(Method::TwoStage).median;
    }
  }
  detail.resize(detail.size() - 2);
  report(9, ran && full_two < full_one, detail);
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"acceptance checks"};
  std::size_t workers = 1;
  app.add_option("--parallel", workers, "worker threads for the Monte-Carlo runs")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  gradient_check();
  convexity_check();
  noise_free_check();
  simulation_checks(workers);
  dataset_check(workers);

  fmt::print("{} of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
