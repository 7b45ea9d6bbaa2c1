// huberloc command-line front end.
//
// Exit codes: 0 success, 1 usage / config / input error, 2 solver failure
// or failed check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "huberloc/baselines.hpp"
#include "huberloc/dataio.hpp"
#include "huberloc/eval.hpp"
#include "huberloc/loss.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace huberloc;

namespace
{

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kRuntimeError = 2;

// Stream of derive_seed(seed, .) used for the half-debias link choice; MC
// runs use streams 0..runs-1.
constexpr std::uint64_t kDebiasStream = 0xdeb1a5;

/// Raised for a failed solve or check; maps to exit code 2.
class RuntimeFailure : public Error
{
public:
  using Error::Error;
};

ScenarioConfig scenario_or_default(const std::string& path)
{
  return path.empty() ? ScenarioConfig{} : load_scenario(path);
}

std::vector<Method> parse_methods(const std::string& list)
{
  if (list.empty() || list == "all")
    return all_methods();
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
  {
    const Method m = parse_method(item);
    if (std::find(out.begin(), out.end(), m) != out.end())
      throw InvalidArgument(fmt::format("method '{}' listed twice", item));
    out.push_back(m);
  }
  return out;
}

std::ofstream open_text(const fs::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.precision(17);
  return out;
}

void write_json(const fs::path& path, const json& j)
{
  auto out = open_text(path);
  out << j.dump(2) << '\n';
  if (!out)
    throw IoError(fmt::format("write to '{}' failed", path.string()));
}

void write_cdf(const fs::path& path, const RunReport& report, const json& echo)
{
  auto out = open_text(path);
  out << "# config " << echo.dump() << '\n';
  out << "error_m,fraction\n";
  if (!report.sorted_errors.empty())
    for (const auto& p : cdf_table(report, report.sorted_errors))
      out << p.error << ',' << p.fraction << '\n';
}

void write_summary(const fs::path& path, const std::map<Method, RunReport>& reports, const json& echo)
{
  auto out = open_text(path);
  out << "# config " << echo.dump() << '\n';
  out << "method,runs,failures,median_m,mean_m,q10_m,q25_m,q50_m,q75_m,q90_m\n";
  for (const auto& [m, r] : reports)
  {
    out << to_string(m) << ',' << r.runs.size() << ',' << r.failures << ',' << r.median << ',' << r.mean;
    for (const char* q : {"q10", "q25", "q50", "q75", "q90"})
      out << ',' << (r.quantiles.count(q) ? r.quantiles.at(q) : std::nan(""));
    out << '\n';
  }
}

void print_reports(const std::map<Method, RunReport>& reports)
{
  fmt::print("{:<12} {:>6} {:>9} {:>10} {:>10}\n", "method", "runs", "failures", "median_m", "mean_m");
  for (const auto& [m, r] : reports)
    fmt::print("{:<12} {:>6} {:>9} {:>10.4f} {:>10.4f}\n", to_string(m), r.runs.size(), r.failures, r.median, r.mean);
}

struct BallCheck
{
  std::size_t links = 0;
  std::size_t violations = 0;
  double worst = 0.0;
};

// Links touching a sensor whose estimated distance exceeds the measured range.
BallCheck check_balls(const Problem& p, const std::vector<Position>& est, double tolerance)
{
  BallCheck c;
  for (const auto& m : p.ms)
  {
    if (!p.net.is_sensor(m.edge.first) && !p.net.is_sensor(m.edge.second))
      continue;
    ++c.links;
    const double excess =
        distance(node_position(p.net, est, m.edge.first), node_position(p.net, est, m.edge.second)) - m.range;
    c.worst = std::max(c.worst, excess);
    if (excess > tolerance)
      ++c.violations;
  }
  return c;
}

void report_check(const BallCheck& c, double tolerance)
{
  fmt::print("check: {} of {} links outside their ball (tolerance {} m, worst excess {:.3g} m)\n", c.violations,
             c.links, tolerance, c.worst);
  if (c.violations > 0)
    throw RuntimeFailure(fmt::format("{} estimate(s) violate a measured range", c.violations));
}

// ---------------------------------------------------------------------------

struct SimulateArgs
{
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
};

void cmd_simulate(const SimulateArgs& a)
{
  const ScenarioConfig scenario = scenario_or_default(a.config);
  RunInstance inst = make_instance(scenario, run_seeds(a.seed, 0));
  Problem problem{inst.net, inst.ms, {}};
  for (std::size_t k = 0; k < inst.net.num_nodes(); ++k)
    problem.ids.push_back(static_cast<long>(k));
  save_problem(a.out, problem);
  write_json(fs::path(a.out) / "scenario.json", {{"seed", a.seed}, {"config", to_json(scenario)}});
  fmt::print("nodes: {} ({} sensors, {} anchors)\n", inst.net.num_nodes(), inst.net.num_sensors(),
             inst.net.num_anchors());
  fmt::print("links: {}\n", inst.ms.size());
  fmt::print("nlos ratio: {:.4f}\n", inst.ms.empty() ? 0.0 : nlos_ratio(inst.ms));
}

struct SolveArgs
{
  std::string nodes;
  std::string ranges;
  std::string method = "two_stage";
  std::string config;
  std::string init = "auto";
  std::string out;
  std::uint64_t seed = 0;
  bool check = false;
  double tolerance = 1e-3;
};

void cmd_solve(const SolveArgs& a)
{
  const ScenarioConfig scenario = scenario_or_default(a.config);
  const Method method = parse_method(a.method);
  const Problem problem = load_problem(a.nodes, a.ranges);
  if (method == Method::OracleLos && !problem.ms.fully_labeled())
    throw InvalidArgument("labels required: oracle_los needs a label column with los/nlos on every link");

  std::string init_mode = a.init;
  if (init_mode == "auto")
    init_mode = problem.net.has_truth() ? "truth" : "centroid";
  EstimateState init;
  if (init_mode == "truth")
  {
    if (!problem.net.has_truth())
      throw InvalidArgument("--init truth needs sensor coordinates in the nodes file");
    init = gaussian_init(problem.net, scenario.init_std, derive_seed(a.seed, 2));
  }
  else if (init_mode == "centroid")
    init = anchor_centroid_init(problem.net, 1.0, derive_seed(a.seed, 2));
  else
    throw InvalidArgument(fmt::format("--init must be auto, truth or centroid, got '{}'", a.init));

  const json echo{{"command", "solve"},    {"method", to_string(method)}, {"seed", a.seed},
                  {"init", init_mode},     {"nodes", a.nodes},            {"ranges", a.ranges},
                  {"config", to_json(scenario)}};
  const MethodResult res = solve_method(method, scenario, problem.net, problem.ms, init);

  fs::create_directories(a.out);
  const fs::path out(a.out);
  save_trace(out / "trace.jsonl", res.stages, echo);
  write_estimates(out / "estimates.csv", problem, res.state.positions, "config " + echo.dump());

  json summary{{"config", echo}, {"diverged", res.diverged}, {"stages", json::array()}};
  for (const auto& [name, trace] : res.stages)
  {
    summary["stages"].push_back({{"name", name},
                                 {"rounds", trace.rounds},
                                 {"termination", to_string(trace.reason)},
                                 {"final_cost", trace.cost.empty() ? 0.0 : trace.cost.back()}});
    fmt::print("{}: {} rounds, {}, final cost {:.6g}\n", name, trace.rounds, to_string(trace.reason),
               trace.cost.empty() ? 0.0 : trace.cost.back());
  }
  if (problem.net.has_truth() && !res.diverged)
  {
    const double err = network_error(res.state.positions, problem.net.true_sensor_positions());
    summary["network_error_m"] = err;
    fmt::print("network error: {:.4f} m\n", err);
  }
  write_json(out / "summary.json", summary);

  if (res.diverged)
    throw RuntimeFailure(fmt::format("solver diverged: {} (partial trace written)", res.failure));
  if (a.check)
    report_check(check_balls(problem, res.state.positions, a.tolerance), a.tolerance);
}

struct EvalArgs
{
  std::string config;
  std::string methods = "all";
  std::string out;
  std::uint64_t seed = 0;
  std::size_t parallel = 1;
  std::optional<std::size_t> runs;
};

void cmd_eval(const EvalArgs& a)
{
  ScenarioConfig scenario = scenario_or_default(a.config);
  if (a.runs)
    scenario.mc_runs = *a.runs;
  scenario.validate();
  const std::vector<Method> methods = parse_methods(a.methods);
  const auto reports = run_monte_carlo(scenario, methods, a.seed, a.parallel);

  fs::create_directories(a.out);
  const fs::path out(a.out);
  const json echo{{"command", "eval"}, {"seed", a.seed}, {"config", to_json(scenario)}};
  for (const auto& [m, r] : reports)
  {
    json e = echo;
    e["method"] = to_string(m);
    write_cdf(out / fmt::format("cdf_{}.csv", to_string(m)), r, e);
    save_report(out / fmt::format("report_{}.jsonl", to_string(m)), r, e);
  }
  write_summary(out / "summary.csv", reports, echo);
  print_reports(reports);
}

struct DatasetArgs
{
  std::string bundle;
  std::string debias = "raw";
  std::string method = "two_stage";
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::optional<std::size_t> runs;
  std::optional<double> avg_bias;
  std::size_t parallel = 1;
};

void cmd_dataset(const DatasetArgs& a)
{
  const DatasetBundle bundle = load_dataset(a.bundle);
  for (const auto& w : bundle.warnings)
    fmt::print(stderr, "warning: {}\n", w);
  const DebiasMode mode = parse_debias_mode(a.debias);
  const Method method = parse_method(a.method);
  const std::optional<double> avg_bias = a.avg_bias ? a.avg_bias : bundle.avg_bias;
  if (!avg_bias && mode != DebiasMode::Raw)
    throw InvalidArgument("--avg-bias is required: the bundle does not record an average bias");

  ScenarioConfig scenario = scenario_or_default(a.config);
  scenario.noise.sigma_n = bundle.sigma_n;
  if (a.runs)
    scenario.mc_runs = *a.runs;
  scenario.validate();

  const Problem problem = apply_debias(bundle, mode, avg_bias.value_or(0.0), derive_seed(a.seed, kDebiasStream));
  if (!problem.net.has_truth())
    throw InvalidArgument("dataset runs need coordinates for every sensor");

  const std::vector<Method> methods{method};
  RunReport report = run_reinitialized(scenario, problem.net, problem.ms, methods, a.seed, a.parallel).at(method);

  const json echo{{"command", "dataset"},          {"bundle", a.bundle},        {"name", bundle.name},
                  {"surrogate", bundle.surrogate}, {"debias", to_string(mode)}, {"avg_bias_m", avg_bias.value_or(0.0)},
                  {"method", to_string(method)},   {"seed", a.seed},            {"config", to_json(scenario)}};
  fs::create_directories(a.out);
  const fs::path out(a.out);

  // estimates of the first re-initialization
  const EstimateState init = gaussian_init(problem.net, scenario.init_std, run_seeds(a.seed, 0).init);
  const MethodResult first = solve_method(method, scenario, problem.net, problem.ms, init);
  write_estimates(out / "estimates.csv", problem, first.state.positions, "config " + echo.dump());

  auto table = open_text(out / "sensor_errors.csv");
  table << "# config " << echo.dump() << '\n';
  table << "id,x_m,y_m,mean_error_m,median_error_m\n";
  const auto& truth = problem.net.true_sensor_positions();
  for (std::size_t i = 0; i < problem.net.num_sensors(); ++i)
  {
    std::vector<double> errs;
    for (const auto& run : report.runs)
      if (!run.failed)
        errs.push_back(run.sensor_errors[i]);
    std::sort(errs.begin(), errs.end());
    const double mean = errs.empty() ? std::nan("") : std::accumulate(errs.begin(), errs.end(), 0.0) / errs.size();
    const double median = errs.empty() ? std::nan("") : quantile(errs, 0.5);
    table << problem.ids[i] << ',' << truth[i].x << ',' << truth[i].y << ',' << mean << ',' << median << '\n';
  }

  write_cdf(out / "cdf.csv", report, echo);
  save_report(out / "report.jsonl", report, echo);
  fmt::print("{}{}: {} sensors, {} anchors, {} links, debias {}\n", bundle.name,
             bundle.surrogate ? " (surrogate)" : "", problem.net.num_sensors(), problem.net.num_anchors(),
             problem.ms.size(), to_string(mode));
  print_reports({{method, report}});
}

struct CheckArgs
{
  std::string nodes;
  std::string ranges;
  std::string estimates;
  double tolerance = 1e-3;
};

void cmd_check(const CheckArgs& a)
{
  const Problem problem = load_problem(a.nodes, a.ranges);
  report_check(check_balls(problem, read_estimates(a.estimates, problem), a.tolerance), a.tolerance);
}

struct SurrogateArgs
{
  std::string out;
  std::uint64_t seed = 0;
  double nlos_prob = 0.9;
  double bias_mean = 3.0;
};

void cmd_surrogate(const SurrogateArgs& a)
{
  const DatasetBundle bundle = make_surrogate_dataset(a.seed, a.nlos_prob, a.bias_mean);
  save_dataset(a.out, bundle);
  fmt::print("{}: {} sensors, {} anchors, {} links, average bias {:.4f} m\n", bundle.name, bundle.num_sensors(),
             bundle.num_anchors(), bundle.ranges.size(), bundle.avg_bias.value_or(0.0));
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Two-stage Huber cooperative localization"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw one network and its range measurements");
  simulate->add_option("--config", sim.config, "Scenario JSON (defaults to the reference scenario)");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Master seed")->required();

  SolveArgs sol;
  auto* solve = app.add_subcommand("solve", "Localize the sensors of one problem");
  solve->add_option("--nodes", sol.nodes, "Node file (id,x_m,y_m,role)")->required();
  solve->add_option("--ranges", sol.ranges, "Range file (i,j,range_m[,label])")->required();
  solve->add_option("--method", sol.method, "two_stage, stage_one, relaxed_nls, raw_huber, pocs or oracle_los")
      ->capture_default_str();
  solve->add_option("--config", sol.config, "Scenario JSON with solver settings");
  solve->add_option("--init", sol.init, "auto, truth (Gaussian around truth) or centroid")->capture_default_str();
  solve->add_option("--seed", sol.seed, "Seed of the random start")->required();
  solve->add_option("--out", sol.out, "Output directory")->required();
  solve->add_flag("--check", sol.check, "Fail unless every estimate lies inside its measured balls");
  solve->add_option("--tolerance", sol.tolerance, "Ball check tolerance in metres")->capture_default_str();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Monte-Carlo comparison of methods");
  eval->add_option("--config", ev.config, "Scenario JSON");
  eval->add_option("--methods", ev.methods, "Comma-separated methods or 'all'")->capture_default_str();
  eval->add_option("--seed", ev.seed, "Master seed")->required();
  eval->add_option("--out", ev.out, "Output directory")->required();
  eval->add_option("--parallel", ev.parallel, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--runs", ev.runs, "Override mc_runs")->check(CLI::PositiveNumber);

  DatasetArgs ds;
  auto* dataset = app.add_subcommand("dataset", "Re-initialized trials on a measurement bundle");
  dataset->add_option("--bundle", ds.bundle, "Bundle directory")->required();
  dataset->add_option("--debias", ds.debias, "raw, half or full")->capture_default_str();
  dataset->add_option("--method", ds.method, "Solver method")->capture_default_str();
  dataset->add_option("--config", ds.config, "Scenario JSON with solver settings");
  dataset->add_option("--avg-bias", ds.avg_bias, "Average bias in metres (overrides the bundle value)");
  dataset->add_option("--seed", ds.seed, "Master seed")->required();
  dataset->add_option("--runs", ds.runs, "Override mc_runs")->check(CLI::PositiveNumber);
  dataset->add_option("--out", ds.out, "Output directory")->required();
  dataset->add_option("--parallel", ds.parallel, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  CheckArgs chk;
  auto* check = app.add_subcommand("check", "Verify estimates against the measured balls");
  check->add_option("--nodes", chk.nodes, "Node file")->required();
  check->add_option("--ranges", chk.ranges, "Range file")->required();
  check->add_option("--estimates", chk.estimates, "Estimates file")->required();
  check->add_option("--tolerance", chk.tolerance, "Tolerance in metres")->capture_default_str();

  SurrogateArgs sur;
  auto* surrogate = app.add_subcommand("surrogate", "Write a synthetic office-scale bundle");
  surrogate->add_option("--out", sur.out, "Bundle directory")->required();
  surrogate->add_option("--seed", sur.seed, "Seed")->required();
  surrogate->add_option("--nlos-prob", sur.nlos_prob, "Probability of a biased link")->capture_default_str();
  surrogate->add_option("--bias-mean", sur.bias_mean, "Mean positive bias in metres")->capture_default_str();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try
  {
    if (*simulate)
      cmd_simulate(sim);
    else if (*solve)
      cmd_solve(sol);
    else if (*eval)
      cmd_eval(ev);
    else if (*dataset)
      cmd_dataset(ds);
    else if (*check)
      cmd_check(chk);
    else if (*surrogate)
      cmd_surrogate(sur);
  }
  catch (const RuntimeFailure& e)
  {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntimeError;
  }
  catch (const DivergenceError& e)
  {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntimeError;
  }
  catch (const Error& e)
  {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }
  catch (const fs::filesystem_error& e)
  {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }
  catch (const std::exception& e)
  {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntimeError;
  }
  return kOk;
}
