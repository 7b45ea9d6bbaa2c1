#include "huberloc/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/format.h>

namespace huberloc
{

std::string_view to_string(Method m)
{
  switch (m)
  {
    case Method::TwoStage:
      return "two_stage";
    case Method::StageOne:
      return "stage_one";
    case Method::RelaxedNls:
      return "relaxed_nls";
    case Method::RawHuber:
      return "raw_huber";
    case Method::Pocs:
      return "pocs";
    case Method::OracleLos:
      return "oracle_los";
  }
  return "?";
}

std::vector<Method> all_methods()
{
  return {Method::TwoStage, Method::StageOne, Method::RelaxedNls, Method::RawHuber, Method::Pocs, Method::OracleLos};
}

Method parse_method(std::string_view text)
{
  if (text == "relaxed_huber")
    return Method::StageOne;
  for (auto m : all_methods())
  {
    if (text == to_string(m))
      return m;
  }
  throw InvalidArgument(fmt::format("unknown method '{}'", text));
}

std::string_view to_string(Placement p) { return p == Placement::Fixed ? "fixed" : "redraw"; }

Placement parse_placement(std::string_view text)
{
  if (text == "fixed")
    return Placement::Fixed;
  if (text == "redraw")
    return Placement::RedrawPerRun;
  throw InvalidArgument(fmt::format("unknown placement '{}'", text));
}

namespace
{

void validate_stage(const StageConfig& cfg, std::string_view field)
{
  try
  {
    cfg.validate();
  }
  catch (const InvalidArgument& e)
  {
    throw InvalidArgument(fmt::format("{}: {}", field, e.what()));
  }
}

}  // namespace

void ScenarioConfig::validate() const
{
  if (!(area_side > 0.0) || !std::isfinite(area_side))
    throw InvalidArgument(fmt::format("area_side must be > 0, got {}", area_side));
  if (num_sensors < 1)
    throw InvalidArgument("num_sensors must be >= 1");
  if (anchors.empty())
    throw InvalidArgument("anchors must not be empty");
  for (const auto& a : anchors)
  {
    if (!is_finite(a))
      throw InvalidArgument("anchors: coordinates must be finite");
  }
  if (!(comm_radius >= 0.0))
    throw InvalidArgument(fmt::format("comm_radius must be >= 0, got {}", comm_radius));
  noise.validate();
  if (solver_sigma_n && !(*solver_sigma_n > 0.0 && std::isfinite(*solver_sigma_n)))
    throw InvalidArgument(fmt::format("solver_sigma_n must be > 0, got {}", *solver_sigma_n));
  if (!(knee_sigma() > 0.0))
    throw InvalidArgument("solver_sigma_n must be set when noise.sigma_n is 0 (Huber knees scale with it)");
  if (!(init_std >= 0.0) || !std::isfinite(init_std))
    throw InvalidArgument(fmt::format("init_std must be >= 0, got {}", init_std));
  if (mc_runs < 1)
    throw InvalidArgument("mc_runs must be >= 1");
  validate_stage(stage1, "stage1");
  if (stage2.max_iters > 0)
    validate_stage(stage2, "stage2");
  validate_stage(relaxed_nls, "relaxed_nls");
  validate_stage(raw_huber, "raw_huber");
  validate_stage(oracle, "oracle");
  if (pocs_iters < 1)
    throw InvalidArgument("pocs_iters must be >= 1");
  if (oracle_pocs_iters < 1)
    throw InvalidArgument("oracle_pocs_iters must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream)
{
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RunSeeds run_seeds(std::uint64_t master_seed, std::size_t run_index)
{
  const std::uint64_t run = derive_seed(master_seed, run_index);
  return {run, derive_seed(run, 0), derive_seed(run, 1), derive_seed(run, 2)};
}

RunInstance make_instance(const ScenarioConfig& scenario, const RunSeeds& seeds)
{
  const std::uint64_t placement_seed =
      scenario.placement == Placement::Fixed ? scenario.placement_seed : seeds.placement;
  std::mt19937_64 rng(placement_seed);
  std::uniform_real_distribution<double> coord(0.0, scenario.area_side);

  std::vector<Position> positions;
  positions.reserve(scenario.num_sensors + scenario.anchors.size());
  for (std::size_t i = 0; i < scenario.num_sensors; ++i)
  {
    const double x = coord(rng);
    const double y = coord(rng);
    positions.push_back({x, y});
  }
  positions.insert(positions.end(), scenario.anchors.begin(), scenario.anchors.end());

  Network net = build_topology(positions, scenario.num_sensors, scenario.comm_radius);
  MeasurementSet ms = synthesize(net, scenario.noise, seeds.measurement);
  EstimateState init = gaussian_init(net, scenario.init_std, seeds.init);
  return {std::move(net), std::move(ms), std::move(init)};
}

double network_error(std::span<const Position> estimates, std::span<const Position> truth)
{
  if (estimates.size() != truth.size())
    throw InvalidArgument(
        fmt::format("network_error: {} estimates vs {} true positions", estimates.size(), truth.size()));
  if (estimates.empty())
    throw InvalidArgument("network_error of an empty network");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i)
  {
    const Position e = estimates[i] - truth[i];
    sum += e.x * e.x + e.y * e.y;
  }
  return std::sqrt(sum / static_cast<double>(estimates.size()));
}

double quantile(std::span<const double> sorted, double q)
{
  if (sorted.empty())
    throw InvalidArgument("quantile of no samples");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void summarize(RunReport& report)
{
  report.sorted_errors.clear();
  report.failures = 0;
  for (const auto& run : report.runs)
  {
    if (run.failed)
      ++report.failures;
    else
      report.sorted_errors.push_back(run.network_error);
  }
  std::sort(report.sorted_errors.begin(), report.sorted_errors.end());
  report.quantiles.clear();
  if (report.sorted_errors.empty())
  {
    report.median = report.mean = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  report.median = quantile(report.sorted_errors, 0.5);
  report.mean = std::accumulate(report.sorted_errors.begin(), report.sorted_errors.end(), 0.0) /
                static_cast<double>(report.sorted_errors.size());
  for (auto [name, q] : {std::pair{"q10", 0.1}, {"q25", 0.25}, {"q50", 0.5}, {"q75", 0.75}, {"q90", 0.9}})
    report.quantiles[name] = quantile(report.sorted_errors, q);
}

namespace
{

StageSummary summary_of(std::string name, const SolveTrace& trace)
{
  return {std::move(name), trace.rounds, trace.reason, trace.cost.empty() ? 0.0 : trace.cost.back()};
}

}  // namespace

MethodResult solve_method(Method method, const ScenarioConfig& scenario, const Network& net,
                          const MeasurementSet& ms, const EstimateState& init)
{
  const double sigma = scenario.knee_sigma();
  const Schedule schedule = scenario.schedule;
  MethodResult out;
  out.state = init;
  // name of the stage currently running, for the partial trace
  std::string current;
  auto stage = [&](std::string name, auto&& solve) {
    current = std::move(name);
    StageResult res = solve(out.state);
    out.stages.emplace_back(current, std::move(res.trace));
    out.state = std::move(res.state);
  };

  try
  {
    switch (method)
    {
      case Method::TwoStage:
        if (scenario.stage1.loss != LossKind::RelaxedHuber || scenario.stage2.loss != LossKind::Huber)
          throw InvalidArgument("two_stage expects stage1.loss = relaxed_huber and stage2.loss = huber");
        stage("stage1", [&](const EstimateState& x) { return run_stage(net, ms, x, scenario.stage1, sigma, schedule); });
        if (scenario.stage2.max_iters > 0)
          stage("stage2",
                [&](const EstimateState& x) { return run_stage(net, ms, x, scenario.stage2, sigma, schedule); });
        break;
      case Method::StageOne:
        stage("stage1", [&](const EstimateState& x) { return run_stage(net, ms, x, scenario.stage1, sigma, schedule); });
        break;
      case Method::RelaxedNls:
        stage("relaxed_nls", [&](const EstimateState& x) {
          return solve_relaxed_nls(net, ms, x, scenario.relaxed_nls, sigma, schedule);
        });
        break;
      case Method::RawHuber:
        stage("huber",
              [&](const EstimateState& x) { return solve_raw_huber(net, ms, x, scenario.raw_huber, sigma, schedule); });
        break;
      case Method::Pocs: {
        PocsConfig cfg;
        cfg.max_iters = scenario.pocs_iters;
        stage("pocs", [&](const EstimateState& x) { return solve_pocs(net, ms, x, cfg, schedule); });
        break;
      }
      case Method::OracleLos: {
        PocsConfig cfg;
        cfg.max_iters = scenario.oracle_pocs_iters;
        stage("oracle_nls", [&](const EstimateState& x) {
          return solve_oracle_los(net, ms, x, scenario.oracle, sigma, cfg, schedule);
        });
        break;
      }
    }
  }
  catch (const DivergenceError& e)
  {
    out.diverged = true;
    out.failure = e.what();
    out.state = e.last_state();
    out.stages.emplace_back(current, e.partial_trace());
  }
  return out;
}

RunRecord run_method(Method method, const ScenarioConfig& scenario, const RunInstance& instance)
{
  const auto& [net, ms, init] = instance;
  RunRecord rec;
  rec.measurement_hash = ms.hash();
  rec.nlos_ratio = ms.empty() ? 0.0 : nlos_ratio(ms);

  MethodResult res = solve_method(method, scenario, net, ms, init);
  if (res.diverged)
  {
    rec.failed = true;
    rec.failure = std::move(res.failure);
    return rec;
  }
  for (const auto& [name, trace] : res.stages)
    rec.stages.push_back(summary_of(name, trace));

  const auto& estimate = res.state.positions;
  const auto& truth = net.true_sensor_positions();
  rec.network_error = network_error(estimate, truth);
  rec.sensor_errors.reserve(estimate.size());
  for (std::size_t i = 0; i < estimate.size(); ++i)
    rec.sensor_errors.push_back(distance(estimate[i], truth[i]));
  return rec;
}

namespace
{

// rows[k] holds one record per method for run k
using RunRows = std::vector<std::vector<RunRecord>>;

RunRows run_parallel(std::size_t runs, std::size_t workers, const std::function<std::vector<RunRecord>(std::size_t)>& job)
{
  RunRows rows(runs);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < runs; k = next++)
      rows[k] = job(k);
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(runs, 1));
  if (workers == 1)
  {
    work();
  }
  else
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(work);
  }
  return rows;
}

std::map<Method, RunReport> collect(RunRows rows, std::span<const Method> methods)
{
  std::map<Method, RunReport> reports;
  for (std::size_t m = 0; m < methods.size(); ++m)
  {
    RunReport& report = reports[methods[m]];
    report.method = std::string(to_string(methods[m]));
    report.runs.reserve(rows.size());
    for (auto& row : rows)
      report.runs.push_back(std::move(row[m]));
    summarize(report);
  }
  return reports;
}

std::vector<RunRecord> run_all(std::span<const Method> methods, const ScenarioConfig& scenario,
                               const RunInstance& instance, std::size_t k, std::uint64_t run_seed)
{
  std::vector<RunRecord> row;
  row.reserve(methods.size());
  for (Method m : methods)
  {
    RunRecord rec = run_method(m, scenario, instance);
    rec.index = k;
    rec.seed = run_seed;
    row.push_back(std::move(rec));
  }
  return row;
}

}  // namespace

std::map<Method, RunReport> run_monte_carlo(const ScenarioConfig& scenario, std::span<const Method> methods,
                                            std::uint64_t master_seed, std::size_t workers)
{
  scenario.validate();
  if (methods.empty())
    throw InvalidArgument("run_monte_carlo needs at least one method");
  auto rows = run_parallel(scenario.mc_runs, workers, [&](std::size_t k) {
    const RunSeeds seeds = run_seeds(master_seed, k);
    return run_all(methods, scenario, make_instance(scenario, seeds), k, seeds.run);
  });
  return collect(std::move(rows), methods);
}

std::map<Method, RunReport> run_reinitialized(const ScenarioConfig& scenario, const Network& net,
                                              const MeasurementSet& ms, std::span<const Method> methods,
                                              std::uint64_t master_seed, std::size_t workers)
{
  scenario.validate();
  if (methods.empty())
    throw InvalidArgument("run_reinitialized needs at least one method");
  if (!net.has_truth())
    throw InvalidArgument("re-initialized trials need ground-truth sensor positions");
  auto rows = run_parallel(scenario.mc_runs, workers, [&](std::size_t k) {
    const RunSeeds seeds = run_seeds(master_seed, k);
    const RunInstance instance{net, ms, gaussian_init(net, scenario.init_std, seeds.init)};
    return run_all(methods, scenario, instance, k, seeds.run);
  });
  return collect(std::move(rows), methods);
}

std::vector<CdfPoint> cdf_table(std::span<const double> samples, std::span<const double> grid)
{
  if (samples.empty())
    throw InvalidArgument("cdf_table needs at least one sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<CdfPoint> table;
  table.reserve(grid.size());
  for (double g : grid)
  {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), g) - sorted.begin();
    table.push_back({g, static_cast<double>(count) / static_cast<double>(sorted.size())});
  }
  return table;
}

std::vector<CdfPoint> cdf_table(const RunReport& report, std::span<const double> grid)
{
  return cdf_table(report.sorted_errors, grid);
}

std::vector<double> linear_grid(double lo, double hi, std::size_t count)
{
  if (count == 0)
    return {};
  if (count == 1)
    return {lo};
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k)
    grid[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  return grid;
}

}  // namespace huberloc
