#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "huberloc/core.hpp"
#include "huberloc/measurement.hpp"

namespace testing
{

using namespace huberloc;

inline std::vector<Position> uniform_points(std::mt19937_64& rng, std::size_t n, double side)
{
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<Position> out(n);
  for (auto& p : out)
    p = {u(rng), u(rng)};
  return out;
}

/// Fully connected network of `sensors` random sensors plus the four
/// corners of a `side` square as anchors.
inline Network random_network(std::mt19937_64& rng, std::size_t sensors, double side = 10.0,
                              double radius = kFullConnectivity)
{
  std::vector<Position> all = uniform_points(rng, sensors, side);
  for (Position a : {Position{0, 0}, Position{side, 0}, Position{side, side}, Position{0, side}})
    all.push_back(a);
  return build_topology(all, sensors, radius);
}

/// True distances on every edge, labeled LOS.
inline MeasurementSet exact_ranges(const Network& net)
{
  std::vector<Measurement> m;
  for (const Edge& e : net.edges())
    m.push_back({e, distance(net.true_position(e.first), net.true_position(e.second)), LinkLabel::Los});
  return MeasurementSet(net, m);
}

inline std::vector<Position> jitter(const std::vector<Position>& x, std::mt19937_64& rng, double std_dev)
{
  std::normal_distribution<double> n(0.0, std_dev);
  std::vector<Position> out = x;
  for (auto& p : out)
    p += Position{n(rng), n(rng)};
  return out;
}

inline double max_error(const std::vector<Position>& a, const std::vector<Position>& b)
{
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, distance(a[i], b[i]));
  return worst;
}

}  // namespace testing
