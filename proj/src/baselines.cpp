#include "huberloc/baselines.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace huberloc
{

StageResult solve_relaxed_nls(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                              StageConfig cfg, double sigma_n, Schedule schedule)
{
  cfg.loss = LossKind::RelaxedNls;
  return run_stage(net, ms, init, cfg, sigma_n, schedule);
}

StageResult solve_raw_huber(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                            StageConfig cfg, double sigma_n, Schedule schedule)
{
  cfg.loss = LossKind::Huber;
  return run_stage(net, ms, init, cfg, sigma_n, schedule);
}

Position project_onto_ball(Position x, Position center, double radius)
{
  radius = std::max(radius, 0.0);
  const Position diff = x - center;
  const double d = norm(diff);
  if (d <= radius)
    return x;
  return center + (radius / d) * diff;
}

Position pocs_update(const LocalView& view, double relaxation)
{
  if (view.neighbors.empty())
    return view.estimate;
  Position mean;
  for (const auto& nb : view.neighbors)
    mean += project_onto_ball(view.estimate, nb.position, nb.range);
  mean = (1.0 / static_cast<double>(view.neighbors.size())) * mean;
  return view.estimate + (1.0 - relaxation) * (mean - view.estimate);
}

StageResult solve_pocs(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                       const PocsConfig& cfg, Schedule schedule)
{
  if (!cfg.relaxation)
    throw InvalidArgument("POCS relaxation policy is empty");
  return run_rounds(
      net, ms, init, cfg.max_iters, cfg.conv_threshold, schedule,
      [&](const LocalView& view, std::size_t round) { return pocs_update(view, cfg.relaxation(round)); },
      [&](std::span<const Position> x) { return network_cost(LossKind::RelaxedNls, {}, x, net, ms); });
}

StageConfig reference_relaxed_nls() { return {LossKind::RelaxedNls, 0.02, 2.0, 50, 0.0}; }

StageConfig reference_raw_huber() { return {LossKind::Huber, 0.04, 2.0, 50, 0.0}; }

StageConfig reference_oracle() { return {LossKind::Nls, 0.01, 0.0, 50, 0.0}; }

std::pair<Network, MeasurementSet> los_subproblem(const Network& net, const MeasurementSet& ms)
{
  if (!ms.fully_labeled())
    throw InvalidArgument("labels required: the oracle baseline needs LOS/NLOS labels on every link");
  std::vector<bool> keep(ms.size());
  std::vector<Measurement> kept;
  for (std::size_t k = 0; k < ms.size(); ++k)
  {
    keep[k] = ms[k].label == LinkLabel::Los;
    if (keep[k])
      kept.push_back(ms[k]);
  }
  Network sub = net.with_edges(keep);
  MeasurementSet sub_ms(sub, std::move(kept));
  return {std::move(sub), std::move(sub_ms)};
}

StageResult solve_oracle_los(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                             const StageConfig& cfg, double sigma_n, const PocsConfig& pocs, Schedule schedule)
{
  auto [los_net, los_ms] = los_subproblem(net, ms);
  std::vector<std::string> warnings;
  if (los_ms.empty())
    warnings.push_back("no LOS links remain; sensors stay at their initial estimates");
  else if (!sensors_reach_anchors(los_net))
    warnings.push_back("LOS-only network is disconnected; some sensors cannot reach an anchor");

  StageResult start = solve_pocs(los_net, los_ms, init, pocs, schedule);
  StageResult out = run_stage(los_net, los_ms, start.state, cfg, sigma_n, schedule);
  out.trace.warnings.insert(out.trace.warnings.begin(), warnings.begin(), warnings.end());
  return out;
}

}  // namespace huberloc
