#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "huberloc/baselines.hpp"
#include "huberloc/measurement.hpp"
#include "huberloc/solver.hpp"

namespace huberloc
{

enum class Method
{
  TwoStage,
  StageOne,
  RelaxedNls,
  RawHuber,
  Pocs,
  OracleLos,
};

std::string_view to_string(Method m);
Method parse_method(std::string_view text);
std::vector<Method> all_methods();

enum class Placement
{
  RedrawPerRun,
  Fixed,
};

std::string_view to_string(Placement p);
Placement parse_placement(std::string_view text);

/// Monte-Carlo scenario. Defaults reproduce the reference simulation:
/// 50 sensors uniform on a 10 m square, anchors at the corners, full
/// connectivity, sigma_n = 0.5 m, bias mean 10 m, init std 10 m, 500 runs.
struct ScenarioConfig
{
  double area_side = 10.0;
  std::size_t num_sensors = 50;
  std::vector<Position> anchors = {{0.0, 0.0}, {10.0, 0.0}, {10.0, 10.0}, {0.0, 10.0}};
  Placement placement = Placement::RedrawPerRun;
  /// Used for the single layout when placement is Fixed.
  std::uint64_t placement_seed = 0;
  double comm_radius = kFullConnectivity;
  NoiseModel noise{0.5, 0.05, 10.0};
  /// Noise level the solvers assume when setting Huber knees (K = alpha *
  /// sigma). Defaults to noise.sigma_n; set it for noise-free data.
  std::optional<double> solver_sigma_n;
  double init_std = 10.0;
  std::size_t mc_runs = 500;
  Schedule schedule = Schedule::Jacobi;

  StageConfig stage1 = reference_stage1();
  StageConfig stage2 = reference_stage2();
  StageConfig relaxed_nls = reference_relaxed_nls();
  StageConfig raw_huber = reference_raw_huber();
  std::size_t pocs_iters = 50;
  StageConfig oracle = reference_oracle();
  std::size_t oracle_pocs_iters = 50;

  double knee_sigma() const { return solver_sigma_n.value_or(noise.sigma_n); }

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

/// splitmix64-based derivation: a pure function of (base, stream).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Seeds of one MC run. run = derive_seed(master, k); placement, noise and
/// init streams are derive_seed(run, 0 / 1 / 2).
struct RunSeeds
{
  std::uint64_t run;
  std::uint64_t placement;
  std::uint64_t measurement;
  std::uint64_t init;
};
RunSeeds run_seeds(std::uint64_t master_seed, std::size_t run_index);

/// The network, measurements and start shared by every method in one run.
struct RunInstance
{
  Network net;
  MeasurementSet ms;
  EstimateState init;
};
RunInstance make_instance(const ScenarioConfig& scenario, const RunSeeds& seeds);

/// sqrt(mean_i ||est_i - truth_i||^2).
double network_error(std::span<const Position> estimates, std::span<const Position> truth);

struct StageSummary
{
  std::string name;
  std::size_t rounds = 0;
  Termination reason = Termination::MaxIters;
  double final_cost = 0.0;

  friend bool operator==(const StageSummary&, const StageSummary&) = default;
};

struct RunRecord
{
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::uint64_t measurement_hash = 0;
  double nlos_ratio = 0.0;
  bool failed = false;
  std::string failure;
  double network_error = 0.0;
  std::vector<double> sensor_errors;
  std::vector<StageSummary> stages;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct RunReport
{
  std::string method;
  std::vector<RunRecord> runs;

  // aggregate over successful runs, filled by summarize()
  std::vector<double> sorted_errors;
  std::size_t failures = 0;
  double median = 0.0;
  double mean = 0.0;
  std::map<std::string, double> quantiles;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Linear-interpolated quantile (q in [0, 1]) of sorted samples.
double quantile(std::span<const double> sorted, double q);

/// Recomputes the aggregate fields of `report` from its runs.
void summarize(RunReport& report);

/// Final estimate of one method plus the trace of every stage it ran. On
/// divergence `diverged` is set, `state` is the last finite state and the
/// final stage trace is partial.
struct MethodResult
{
  EstimateState state;
  std::vector<std::pair<std::string, SolveTrace>> stages;
  bool diverged = false;
  std::string failure;
};

MethodResult solve_method(Method method, const ScenarioConfig& scenario, const Network& net,
                          const MeasurementSet& ms, const EstimateState& init);

/// Runs one method on one instance and records its errors. Divergence is
/// caught and recorded as a failed run.
RunRecord run_method(Method method, const ScenarioConfig& scenario, const RunInstance& instance);

/// Every method sees the same network, measurements and init within a run.
/// Runs are distributed over `workers` threads; results are reduced in run
/// order so the output does not depend on the worker count.
std::map<Method, RunReport> run_monte_carlo(const ScenarioConfig& scenario, std::span<const Method> methods,
                                            std::uint64_t master_seed, std::size_t workers = 1);

/// Repeated solves of one fixed problem from fresh Gaussian starts around
/// the ground truth (std scenario.init_std, init seed of run k as in
/// run_seeds). Network geometry and noise fields of `scenario` are ignored
/// except knee_sigma(), which sets the Huber knees.
std::map<Method, RunReport> run_reinitialized(const ScenarioConfig& scenario, const Network& net,
                                              const MeasurementSet& ms, std::span<const Method> methods,
                                              std::uint64_t master_seed, std::size_t workers = 1);

struct CdfPoint
{
  double error;
  double fraction;

  friend bool operator==(const CdfPoint&, const CdfPoint&) = default;
};

/// Empirical CDF, fraction of samples <= each grid value. Throws on no samples.
std::vector<CdfPoint> cdf_table(std::span<const double> samples, std::span<const double> grid);
std::vector<CdfPoint> cdf_table(const RunReport& report, std::span<const double> grid);

/// `count` evenly spaced points from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, std::size_t count);

}  // namespace huberloc
