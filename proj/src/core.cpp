#include "huberloc/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace huberloc
{

double norm(Position v) { return std::hypot(v.x, v.y); }

bool is_finite(Position p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double distance(Position a, Position b) { return norm(a - b); }

Edge make_edge(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

Network::Network(std::size_t num_sensors, std::vector<Position> anchor_positions, std::vector<Edge> edges,
                 std::optional<std::vector<Position>> true_sensor_positions)
  : num_sensors_(num_sensors), anchors_(std::move(anchor_positions)), truth_(std::move(true_sensor_positions))
{
  for (const auto& a : anchors_)
  {
    if (!is_finite(a))
      throw InvalidArgument("anchor position is not finite");
  }
  if (truth_)
  {
    if (truth_->size() != num_sensors_)
      throw InvalidArgument(fmt::format("expected {} true sensor positions, got {}", num_sensors_, truth_->size()));
    for (const auto& p : *truth_)
    {
      if (!is_finite(p))
        throw InvalidArgument("true sensor position is not finite");
    }
  }

  edges_.reserve(edges.size());
  for (const auto& e : edges)
  {
    if (!is_valid(e.first) || !is_valid(e.second))
      throw InvalidArgument(fmt::format("edge ({}, {}) references a node outside [0, {})", e.first.value,
                                        e.second.value, num_nodes()));
    if (e.first == e.second)
      throw InvalidArgument(fmt::format("self-loop on node {}", e.first.value));
    edges_.push_back(make_edge(e.first, e.second));
  }
  std::sort(edges_.begin(), edges_.end());
  if (auto dup = std::adjacent_find(edges_.begin(), edges_.end()); dup != edges_.end())
    throw InvalidArgument(fmt::format("duplicate edge ({}, {})", dup->first.value, dup->second.value));

  adjacency_.resize(num_nodes());
  for (std::size_t k = 0; k < edges_.size(); ++k)
  {
    adjacency_[edges_[k].first.value].push_back({edges_[k].second, k});
    adjacency_[edges_[k].second.value].push_back({edges_[k].first, k});
  }
  for (auto& adj : adjacency_)
    std::sort(adj.begin(), adj.end(), [](const Incidence& a, const Incidence& b) { return a.neighbor < b.neighbor; });
}

void Network::check_node(NodeId id) const
{
  if (!is_valid(id))
    throw InvalidArgument(fmt::format("node id {} out of range [0, {})", id.value, num_nodes()));
}

Position Network::anchor_position(NodeId id) const
{
  if (!is_anchor(id))
    throw InvalidArgument(fmt::format("node {} is not an anchor", id.value));
  return anchors_[id.value - num_sensors_];
}

const std::vector<Position>& Network::true_sensor_positions() const
{
  if (!truth_)
    throw InvalidArgument("network has no ground-truth sensor positions");
  return *truth_;
}

Position Network::true_position(NodeId id) const
{
  check_node(id);
  return is_anchor(id) ? anchor_position(id) : true_sensor_positions()[id.value];
}

std::span<const Incidence> Network::incident(NodeId id) const
{
  check_node(id);
  return adjacency_[id.value];
}

std::vector<NodeId> Network::neighbors(NodeId id) const
{
  std::vector<NodeId> out;
  for (const auto& inc : incident(id))
    out.push_back(inc.neighbor);
  return out;
}

std::optional<std::size_t> Network::edge_index(NodeId a, NodeId b) const
{
  if (!is_valid(a) || !is_valid(b) || a == b)
    return std::nullopt;
  const Edge e = make_edge(a, b);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
  if (it == edges_.end() || *it != e)
    return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

Network Network::with_edges(const std::vector<bool>& keep) const
{
  if (keep.size() != edges_.size())
    throw InvalidArgument("edge mask length does not match edge count");
  std::vector<Edge> kept;
  for (std::size_t k = 0; k < edges_.size(); ++k)
  {
    if (keep[k])
      kept.push_back(edges_[k]);
  }
  return Network(num_sensors_, anchors_, std::move(kept), truth_);
}

std::vector<NodeId> neighbors(const Network& net, NodeId i) { return net.neighbors(i); }

Network build_topology(std::span<const Position> positions, std::size_t num_sensors, double comm_radius)
{
  if (positions.size() < num_sensors)
    throw InvalidArgument("fewer positions than sensors");
  if (!(comm_radius >= 0.0))
    throw InvalidArgument("communication radius must be non-negative");

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < positions.size(); ++i)
  {
    for (std::size_t j = i + 1; j < positions.size(); ++j)
    {
      // radius 0 is the degenerate empty graph even for coincident nodes
      if (comm_radius > 0.0 && distance(positions[i], positions[j]) <= comm_radius)
        edges.push_back({NodeId{i}, NodeId{j}});
    }
  }
  std::vector<Position> sensors(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(num_sensors));
  std::vector<Position> anchors(positions.begin() + static_cast<std::ptrdiff_t>(num_sensors), positions.end());
  return Network(num_sensors, std::move(anchors), std::move(edges), std::move(sensors));
}

bool sensors_reach_anchors(const Network& net)
{
  std::vector<bool> reached(net.num_nodes(), false);
  std::vector<std::size_t> frontier;
  for (std::size_t a = net.num_sensors(); a < net.num_nodes(); ++a)
  {
    reached[a] = true;
    frontier.push_back(a);
  }
  while (!frontier.empty())
  {
    const std::size_t n = frontier.back();
    frontier.pop_back();
    for (const auto& inc : net.incident(NodeId{n}))
    {
      if (!reached[inc.neighbor.value])
      {
        reached[inc.neighbor.value] = true;
        frontier.push_back(inc.neighbor.value);
      }
    }
  }
  return std::all_of(reached.begin(), reached.begin() + static_cast<std::ptrdiff_t>(net.num_sensors()),
                     [](bool r) { return r; });
}

}  // namespace huberloc
