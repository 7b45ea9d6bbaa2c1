#pragma once

#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace huberloc
{

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

/// 2D point or displacement in meters.
struct Position
{
  double x = 0.0;
  double y = 0.0;

  friend constexpr Position operator+(Position a, Position b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Position operator-(Position a, Position b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Position operator*(double s, Position a) { return {s * a.x, s * a.y}; }
  constexpr Position& operator+=(Position o)
  {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Position& operator-=(Position o)
  {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend constexpr bool operator==(Position, Position) = default;
};

double norm(Position v);
bool is_finite(Position p);

/// Euclidean distance in meters.
double distance(Position a, Position b);

/// Node index. Sensors occupy [0, N), anchors [N, N + M).
struct NodeId
{
  std::size_t value = 0;

  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

/// Unordered node pair stored with first < second.
struct Edge
{
  NodeId first;
  NodeId second;

  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

Edge make_edge(NodeId a, NodeId b);

/// Neighbor entry of the adjacency list: the neighbor and the index of the
/// shared edge in Network::edges().
struct Incidence
{
  NodeId neighbor;
  std::size_t edge_index;
};

inline constexpr double kFullConnectivity = std::numeric_limits<double>::infinity();

/// Node roles, anchor coordinates, optional sensor ground truth and the
/// neighbor graph. Immutable after construction.
class Network
{
public:
  /// Edges may be given in any order and orientation; they are normalized
  /// and sorted. Throws InvalidArgument on self-loops, duplicates,
  /// out-of-range ids or non-finite coordinates.
  Network(std::size_t num_sensors, std::vector<Position> anchor_positions, std::vector<Edge> edges,
          std::optional<std::vector<Position>> true_sensor_positions = std::nullopt);

  std::size_t num_sensors() const { return num_sensors_; }
  std::size_t num_anchors() const { return anchors_.size(); }
  std::size_t num_nodes() const { return num_sensors_ + anchors_.size(); }

  bool is_valid(NodeId id) const { return id.value < num_nodes(); }
  bool is_sensor(NodeId id) const { return id.value < num_sensors_; }
  bool is_anchor(NodeId id) const { return id.value >= num_sensors_ && is_valid(id); }

  const std::vector<Position>& anchor_positions() const { return anchors_; }
  Position anchor_position(NodeId id) const;

  bool has_truth() const { return truth_.has_value(); }
  const std::vector<Position>& true_sensor_positions() const;
  /// Ground truth of any node (anchors always known).
  Position true_position(NodeId id) const;

  /// Sorted, with first < second in each edge.
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Incidence> incident(NodeId id) const;
  std::vector<NodeId> neighbors(NodeId id) const;
  std::optional<std::size_t> edge_index(NodeId a, NodeId b) const;

  /// Copy of this network keeping only the edges whose index is flagged.
  Network with_edges(const std::vector<bool>& keep) const;

private:
  void check_node(NodeId id) const;

  std::size_t num_sensors_;
  std::vector<Position> anchors_;
  std::optional<std::vector<Position>> truth_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adjacency_;
};

std::vector<NodeId> neighbors(const Network& net, NodeId i);

/// Disk graph over `positions` (sensors first, then anchors): edge iff
/// distance <= comm_radius. Pass kFullConnectivity for the complete graph.
Network build_topology(std::span<const Position> positions, std::size_t num_sensors, double comm_radius);

/// True when every sensor reaches at least one anchor through the edge set.
bool sensors_reach_anchors(const Network& net);

}  // namespace huberloc
