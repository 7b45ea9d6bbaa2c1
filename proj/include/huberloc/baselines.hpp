#pragma once

#include <functional>

#include "huberloc/solver.hpp"

namespace huberloc
{

/// Gradient descent on the relaxed least-squares cost.
StageResult solve_relaxed_nls(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                              StageConfig cfg, double sigma_n, Schedule schedule = Schedule::Jacobi);

/// Gradient descent on the (non-convex) Huber cost straight from `init`.
StageResult solve_raw_huber(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                            StageConfig cfg, double sigma_n, Schedule schedule = Schedule::Jacobi);

/// Closest point of the closed disk {x : ||x - center|| <= radius}. A
/// negative radius is treated as zero.
Position project_onto_ball(Position x, Position center, double radius);

struct PocsConfig
{
  std::size_t max_iters = 50;
  double conv_threshold = 0.0;
  /// Relaxation lambda(l) per round. The sensor moves to
  /// x + (1 - lambda) * (mean projection - x), so lambda = 0 is the full
  /// averaged-projection step.
  std::function<double(std::size_t)> relaxation = [](std::size_t) { return 0.0; };
};

/// One cooperative POCS update from local information: the mean over all
/// neighbors of the projection onto their measured balls (identity when
/// already inside), blended by the relaxation.
Position pocs_update(const LocalView& view, double relaxation);

/// Cooperative POCS. The trace records the relaxed least-squares cost
/// (sum of squared distances to the balls).
StageResult solve_pocs(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                       const PocsConfig& cfg, Schedule schedule = Schedule::Jacobi);

/// Least-squares lower bound with perfect NLOS knowledge: NLOS links are
/// dropped, POCS on the remaining LOS links provides the start, then
/// `cfg` (normally NLS) runs on the same LOS links. NLOS ranges are never
/// read. Requires fully labeled measurements.
StageResult solve_oracle_los(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                             const StageConfig& cfg, double sigma_n, const PocsConfig& pocs = {},
                             Schedule schedule = Schedule::Jacobi);

/// Relaxed least squares at half the first-stage step: its gradient is not
/// capped, and at 0.04 the fully connected reference network diverges.
StageConfig reference_relaxed_nls();
/// Huber descent with the first-stage step, knee and budget.
StageConfig reference_raw_huber();
/// Default descent settings of the oracle baseline.
StageConfig reference_oracle();

/// Network and measurements restricted to LOS-labeled links.
std::pair<Network, MeasurementSet> los_subproblem(const Network& net, const MeasurementSet& ms);

}  // namespace huberloc
