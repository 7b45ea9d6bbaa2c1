#include "huberloc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

namespace huberloc
{

std::string_view to_string(Schedule schedule)
{
  return schedule == Schedule::Jacobi ? "jacobi" : "gauss_seidel";
}

Schedule parse_schedule(std::string_view text)
{
  if (text == "jacobi")
    return Schedule::Jacobi;
  if (text == "gauss_seidel" || text == "gauss-seidel")
    return Schedule::GaussSeidel;
  throw InvalidArgument(fmt::format("unknown schedule '{}'", text));
}

std::string_view to_string(Termination t)
{
  switch (t)
  {
    case Termination::Converged:
      return "converged";
    case Termination::MaxIters:
      return "max_iters";
    case Termination::Diverged:
      return "diverged";
  }
  return "?";
}

Termination parse_termination(std::string_view text)
{
  for (auto t : {Termination::Converged, Termination::MaxIters, Termination::Diverged})
  {
    if (text == to_string(t))
      return t;
  }
  throw InvalidArgument(fmt::format("unknown termination reason '{}'", text));
}

void StageConfig::validate() const
{
  if (!(step > 0.0) || !std::isfinite(step))
    throw InvalidArgument(fmt::format("step must be > 0, got {}", step));
  if (max_iters < 1)
    throw InvalidArgument("max_iters must be >= 1");
  if (!(conv_threshold >= 0.0))
    throw InvalidArgument(fmt::format("conv_threshold must be >= 0, got {}", conv_threshold));
  if (is_huber(loss) && !(alpha > 0.0))
    throw InvalidArgument(fmt::format("alpha must be > 0 for {} loss, got {}", to_string(loss), alpha));
}

StageConfig reference_stage1() { return {LossKind::RelaxedHuber, 0.04, 2.0, 50, 0.0}; }

StageConfig reference_stage2() { return {LossKind::Huber, 0.01, 0.1, 50, 0.0}; }

Position node_update(const LocalView& view, const StageConfig& cfg, double sigma_n)
{
  const LossParams params = cfg.loss_params(sigma_n);
  Position grad;
  for (const auto& nb : view.neighbors)
    grad += link_grad(cfg.loss, params, view.estimate, nb.position, nb.range);
  return view.estimate - cfg.step * grad;
}

Position node_update(NodeId i, const std::map<NodeId, Position>& neighbor_views, Position local_est,
                     const Network& net, const MeasurementSet& ms, const StageConfig& cfg, double sigma_n)
{
  const auto incident = net.incident(i);
  if (neighbor_views.size() != incident.size())
    throw InvalidArgument(fmt::format("node {} has {} neighbors but {} views were given", i.value, incident.size(),
                                      neighbor_views.size()));
  LocalView view{i, local_est, {}};
  for (const auto& inc : incident)
  {
    auto it = neighbor_views.find(inc.neighbor);
    if (it == neighbor_views.end())
      throw InvalidArgument(fmt::format("missing view of neighbor {} at node {}", inc.neighbor.value, i.value));
    view.neighbors.push_back({inc.neighbor, it->second, ms[inc.edge_index].range});
  }
  return node_update(view, cfg, sigma_n);
}

namespace
{

LocalView gather(const Network& net, const MeasurementSet& ms, std::span<const Position> broadcasts, NodeId i)
{
  LocalView view{i, broadcasts[i.value], {}};
  const auto incident = net.incident(i);
  view.neighbors.reserve(incident.size());
  for (const auto& inc : incident)
    view.neighbors.push_back({inc.neighbor, node_position(net, broadcasts, inc.neighbor), ms[inc.edge_index].range});
  return view;
}

bool diverged(std::span<const Position> positions)
{
  return std::any_of(positions.begin(), positions.end(), [](Position p) {
    return !is_finite(p) || std::abs(p.x) > kDivergenceLimit || std::abs(p.y) > kDivergenceLimit;
  });
}

}  // namespace

StageResult run_rounds(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                       std::size_t max_iters, double conv_threshold, Schedule schedule, const LocalRule& rule,
                       const CostProbe& cost)
{
  const std::size_t n = net.num_sensors();
  if (init.positions.size() != n)
    throw InvalidArgument(fmt::format("initial state has {} positions, network has {} sensors",
                                      init.positions.size(), n));
  if (ms.size() != net.edges().size())
    throw InvalidArgument("measurement set does not match network edges");

  StageResult result{init, {}};
  auto& state = result.state;
  auto& trace = result.trace;
  std::vector<Position> next(n);

  for (std::size_t round = 0; round < max_iters; ++round)
  {
    double max_disp = 0.0;
    if (schedule == Schedule::Jacobi)
    {
      for (std::size_t i = 0; i < n; ++i)
        next[i] = rule(gather(net, ms, state.positions, NodeId{i}), round);
      for (std::size_t i = 0; i < n; ++i)
        max_disp = std::max(max_disp, distance(next[i], state.positions[i]));
      state.positions.swap(next);
    }
    else
    {
      for (std::size_t i = 0; i < n; ++i)
      {
        const Position updated = rule(gather(net, ms, state.positions, NodeId{i}), round);
        max_disp = std::max(max_disp, distance(updated, state.positions[i]));
        state.positions[i] = updated;
      }
    }

    ++state.round;
    ++trace.rounds;
    trace.max_displacement.push_back(max_disp);
    if (diverged(state.positions))
    {
      trace.cost.push_back(std::numeric_limits<double>::infinity());
      trace.reason = Termination::Diverged;
      throw DivergenceError(fmt::format("estimates diverged in round {}", trace.rounds), state, trace);
    }
    trace.cost.push_back(cost(state.positions));
    if (max_disp <= conv_threshold)
    {
      trace.reason = Termination::Converged;
      return result;
    }
  }
  trace.reason = Termination::MaxIters;
  return result;
}

StageResult run_stage(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                      const StageConfig& cfg, double sigma_n, Schedule schedule)
{
  cfg.validate();
  const LossParams params = cfg.loss_params(sigma_n);
  return run_rounds(
      net, ms, init, cfg.max_iters, cfg.conv_threshold, schedule,
      [&](const LocalView& view, std::size_t) { return node_update(view, cfg, sigma_n); },
      [&](std::span<const Position> x) { return network_cost(cfg.loss, params, x, net, ms); });
}

TwoStageResult solve_two_stage(const Network& net, const MeasurementSet& ms, const EstimateState& init,
                               const StageConfig& stage1, const StageConfig& stage2, double sigma_n,
                               Schedule schedule, bool allow_other_losses)
{
  if (!allow_other_losses && (stage1.loss != LossKind::RelaxedHuber || stage2.loss != LossKind::Huber))
    throw InvalidArgument("two-stage solve expects relaxed_huber then huber (set allow_other_losses for ablations)");

  TwoStageResult out;
  auto first = run_stage(net, ms, init, stage1, sigma_n, schedule);
  out.stage1_state = first.state;
  out.stage1 = std::move(first.trace);
  if (stage2.max_iters == 0)
  {
    out.state = out.stage1_state;
    return out;
  }
  auto second = run_stage(net, ms, out.stage1_state, stage2, sigma_n, schedule);
  out.state = std::move(second.state);
  out.stage2 = std::move(second.trace);
  return out;
}

double choose_alpha2(std::optional<double> nlos_ratio_estimate, const Alpha2Policy& policy)
{
  if (!nlos_ratio_estimate)
    return policy.robust_alpha;
  const double ratio = *nlos_ratio_estimate;
  if (!(ratio >= 0.0 && ratio <= 1.0))
    throw InvalidArgument(fmt::format("NLOS ratio estimate must lie in [0, 1], got {}", ratio));
  return ratio > policy.high_ratio ? policy.robust_alpha : policy.accurate_alpha;
}

EstimateState gaussian_init(const Network& net, double std_dev, std::uint64_t seed)
{
  if (!(std_dev >= 0.0))
    throw InvalidArgument("init std must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  EstimateState state;
  for (const auto& p : net.true_sensor_positions())
  {
    const double dx = std_dev * gauss(rng);
    const double dy = std_dev * gauss(rng);
    state.positions.push_back({p.x + dx, p.y + dy});
  }
  return state;
}

EstimateState anchor_centroid_init(const Network& net, double jitter, std::uint64_t seed)
{
  if (net.num_anchors() == 0)
    throw InvalidArgument("anchor centroid needs at least one anchor");
  Position centroid;
  for (const auto& a : net.anchor_positions())
    centroid += a;
  centroid = (1.0 / static_cast<double>(net.num_anchors())) * centroid;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  EstimateState state;
  for (std::size_t i = 0; i < net.num_sensors(); ++i)
  {
    const double dx = jitter * gauss(rng);
    const double dy = jitter * gauss(rng);
    state.positions.push_back({centroid.x + dx, centroid.y + dy});
  }
  return state;
}

}  // namespace huberloc
