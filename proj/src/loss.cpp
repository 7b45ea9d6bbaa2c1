#include "huberloc/loss.hpp"

#include <cmath>

#include <fmt/format.h>

namespace huberloc
{

std::string_view to_string(LossKind kind)
{
  switch (kind)
  {
    case LossKind::Nls:
      return "nls";
    case LossKind::RelaxedNls:
      return "relaxed_nls";
    case LossKind::Huber:
      return "huber";
    case LossKind::RelaxedHuber:
      return "relaxed_huber";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view text)
{
  for (auto k : {LossKind::Nls, LossKind::RelaxedNls, LossKind::Huber, LossKind::RelaxedHuber})
  {
    if (text == to_string(k))
      return k;
  }
  throw InvalidArgument(fmt::format("unknown loss kind '{}'", text));
}

bool is_huber(LossKind kind) { return kind == LossKind::Huber || kind == LossKind::RelaxedHuber; }

double residual(Position xi, Position xj, double range) { return distance(xi, xj) - range; }

namespace
{

double huber(double knee, double u)
{
  const double a = std::abs(u);
  return a < knee ? u * u : 2.0 * knee * a - knee * knee;
}

}  // namespace

double link_cost(LossKind kind, const LossParams& params, double u)
{
  switch (kind)
  {
    case LossKind::Nls:
      return u * u;
    case LossKind::RelaxedNls:
      return u <= 0.0 ? 0.0 : u * u;
    case LossKind::Huber:
      return huber(params.knee, u);
    case LossKind::RelaxedHuber:
      return u <= 0.0 ? 0.0 : huber(params.knee, u);
  }
  return 0.0;
}

Position link_grad(LossKind kind, const LossParams& params, Position xi, Position xj, double range)
{
  const Position diff = xi - xj;
  const double d = norm(diff);
  if (d == 0.0)
    return {};
  const Position unit = (1.0 / d) * diff;
  const double u = d - range;
  const double k = params.knee;

  double scale = 0.0;
  switch (kind)
  {
    case LossKind::Nls:
      scale = 2.0 * u;
      break;
    case LossKind::RelaxedNls:
      scale = u <= 0.0 ? 0.0 : 2.0 * u;
      break;
    case LossKind::Huber:
      scale = std::abs(u) < k ? 2.0 * u : 2.0 * k * (u < 0.0 ? -1.0 : 1.0);
      break;
    case LossKind::RelaxedHuber:
      if (u <= 0.0)
        scale = 0.0;
      else
        scale = u < k ? 2.0 * u : 2.0 * k;
      break;
  }
  return scale * unit;
}

double network_cost(LossKind kind, const LossParams& params, std::span<const Position> sensors, const Network& net,
                    const MeasurementSet& ms)
{
  if (sensors.size() != net.num_sensors())
    throw InvalidArgument(
        fmt::format("expected {} sensor positions, got {}", net.num_sensors(), sensors.size()));
  if (ms.size() != net.edges().size())
    throw InvalidArgument("measurement set does not match network edges");

  double total = 0.0;
  for (const auto& m : ms)
  {
    const double u = residual(node_position(net, sensors, m.edge.first), node_position(net, sensors, m.edge.second),
                              m.range);
    total += link_cost(kind, params, u);
  }
  return total;
}

}  // namespace huberloc
