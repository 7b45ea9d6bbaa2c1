#pragma once

#include <span>
#include <string_view>

#include "huberloc/core.hpp"
#include "huberloc/measurement.hpp"

namespace huberloc
{

enum class LossKind
{
  Nls,
  RelaxedNls,
  Huber,
  RelaxedHuber,
};

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view text);
bool is_huber(LossKind kind);

struct LossParams
{
  /// Huber knee K in meters. Ignored by the least-squares kinds.
  double knee = 1.0;

  static LossParams from_alpha(double alpha, double sigma_n) { return {alpha * sigma_n}; }
};

/// ||xi - xj|| - r. Negative when xi lies inside the measured ball of xj.
double residual(Position xi, Position xj, double range);

/// Per-link cost of residual u. The relaxed kinds are zero for u <= 0, which
/// is exactly the case ||xi - xj|| <= r.
double link_cost(LossKind kind, const LossParams& params, double u);

/// d cost / d xi for the link (xi, xj, r). The zero vector when xi == xj.
Position link_grad(LossKind kind, const LossParams& params, Position xi, Position xj, double range);

/// Position of any node given the sensor estimates; anchors come from `net`.
inline Position node_position(const Network& net, std::span<const Position> sensors, NodeId id)
{
  return net.is_sensor(id) ? sensors[id.value] : net.anchor_position(id);
}

/// Sum of link_cost over every network edge in sorted edge order.
double network_cost(LossKind kind, const LossParams& params, std::span<const Position> sensors, const Network& net,
                    const MeasurementSet& ms);

}  // namespace huberloc
