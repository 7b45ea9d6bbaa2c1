#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "huberloc/core.hpp"
#include "huberloc/loss.hpp"
#include "huberloc/measurement.hpp"

namespace huberloc
{

/// Coordinates beyond this magnitude (meters) abort a solve as diverged.
inline constexpr double kDivergenceLimit = 1e6;

enum class Schedule
{
  /// Every node reads the frozen round-l snapshot; updates land together.
  Jacobi,
  /// Nodes update in ascending index order and see earlier nodes' new values.
  GaussSeidel,
};

std::string_view to_string(Schedule schedule);
Schedule parse_schedule(std::string_view text);

struct StageConfig
{
  LossKind loss = LossKind::RelaxedHuber;
  double step = 0.04;
  /// Huber knee multiplier, K = alpha * sigma_n.
  double alpha = 2.0;
  std::size_t max_iters = 50;
  /// Stop once every sensor moved at most this far in a round.
  double conv_threshold = 1e-4;

  void validate() const;
  LossParams loss_params(double sigma_n) const { return LossParams::from_alpha(alpha, sigma_n); }
};

/// First stage as run in the reference experiments: relaxed Huber,
/// step 0.04, K = 2 sigma_n, fixed 50 rounds.
StageConfig reference_stage1();
/// Second stage as run in the reference experiments: Huber, step 0.01,
/// K = 0.1 sigma_n, fixed 50 rounds.
StageConfig reference_stage2();

struct EstimateState
{
  std::size_t round = 0;
  std::vector<Position> positions;
};

enum class Termination
{
  Converged,
  MaxIters,
  Diverged,
};

std::string_view to_string(Termination t);
Termination parse_termination(std::string_view text);

struct SolveTrace
{
  /// Network cost after each executed round.
  std::vector<double> cost;
  /// max_i ||x_i(l+1) - x_i(l)|| per executed round.
  std::vector<double> max_displacement;
  std::size_t rounds = 0;
  Termination reason = Termination::MaxIters;
  std::vector<std::string> warnings;

  friend bool operator==(const SolveTrace&, const SolveTrace&) = default;
};

struct StageResult
{
  EstimateState state;
  SolveTrace trace;
};

class DivergenceError : public Error
{
public:
  DivergenceError(const std::string& what, EstimateState last, SolveTrace partial)
    : Error(what), last_(std::move(last)), partial_(std::move(partial))
  {
  }
  const EstimateState& last_state() const { return last_; }
  const SolveTrace& partial_trace() const { return partial_; }

private:
  EstimateState last_;
  SolveTrace partial_;
};

/// What a sensor knows when it updates: its own estimate plus, for every
/// neighbor, the neighbor's broadcast position and the shared range.
struct NeighborView
{
  NodeId id;
  Position position;
  double range = 0.0;
};

struct LocalView
{
  NodeId self;
  Position estimate;
  std::vector<NeighborView> neighbors;
};

/// One gradient step from purely local information.
Position node_update(const LocalView& view, const StageConfig& cfg, double sigma_n);

/// Convenience form taking the neighbor broadcasts as a map. Throws
/// InvalidArgument if the map does not cover exactly the neighbors of i.
Position node_update(NodeId i, const std::map<NodeId, Position>& neighbor_views, Position local_est,
                     const Network& net, const MeasurementSet& ms, const StageConfig& cfg, double sigma_n);

/// Per-sensor update rule; receives the 0-based round index.
using LocalRule = std::function<Position(const LocalView&, std::size_t)>;
using CostProbe = std::function<double(std::span<const Position>)>;

/// Synchronous message-passing round engine shared by every iterative
/// solver. Each round gathers a LocalView per sensor from the current
/// broadcasts and applies `rule`. Stops after `max_iters` rounds or once
/// the largest per-sensor displacement is <= conv_threshold.
StageResult run_rounds(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                       std::size_t max_iters, double conv_threshold, Schedule schedule, const LocalRule& rule,
                       const CostProbe& cost);

StageResult run_stage(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                      const StageConfig& cfg, double sigma_n, Schedule schedule = Schedule::Jacobi);

struct TwoStageResult
{
  EstimateState stage1_state;
  EstimateState state;
  SolveTrace stage1;
  SolveTrace stage2;
};

/// Stage 1 from `init`, then stage 2 from the stage-1 estimate. A stage-2
/// budget of zero rounds skips the refinement. Unless `allow_other_losses`
/// is set, stage 1 must be relaxed Huber and stage 2 Huber.
TwoStageResult solve_two_stage(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                               const StageConfig& stage1, const StageConfig& stage2, double sigma_n,
                               Schedule schedule = Schedule::Jacobi, bool allow_other_losses = false);

struct Alpha2Policy
{
  /// NLOS ratios strictly above this count as heavily contaminated.
  double high_ratio = 0.5;
  double robust_alpha = 0.1;
  double accurate_alpha = 1.5;
};

/// Knee multiplier for the refinement stage given an optional prior on the
/// NLOS ratio. Without a prior the robust (small) value is used.
double choose_alpha2(std::optional<double> nlos_ratio_estimate, const Alpha2Policy& policy = {});

/// True positions plus N(0, std^2) per coordinate. Requires ground truth.
EstimateState gaussian_init(const Network& net, double std_dev, std::uint64_t seed);
/// Anchor centroid plus N(0, jitter^2) per coordinate, for data without
/// ground truth. The jitter breaks the symmetry between sensors.
EstimateState anchor_centroid_init(const Network& net, double jitter, std::uint64_t seed);

}  // namespace huberloc
