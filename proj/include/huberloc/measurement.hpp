#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "huberloc/core.hpp"

namespace huberloc
{

enum class LinkLabel
{
  Unknown,
  Los,
  Nlos,
};

std::string_view to_string(LinkLabel label);
LinkLabel parse_link_label(std::string_view text);

/// Zero-mean Gaussian noise on every link plus an exponential positive bias
/// on links drawn NLOS with probability nlos_prob.
struct NoiseModel
{
  double sigma_n = 0.5;
  double nlos_prob = 0.0;
  /// Mean of the exponential NLOS bias, meters.
  double bias_mean = 10.0;

  /// Throws InvalidArgument naming the offending field. sigma_n = 0 is
  /// accepted as the noise-free limit.
  void validate() const;
};

struct Measurement
{
  Edge edge;
  double range = 0.0;
  LinkLabel label = LinkLabel::Unknown;
};

/// One range per network edge, stored in the network's sorted edge order.
class MeasurementSet
{
public:
  MeasurementSet() = default;
  /// Throws InvalidArgument unless `entries` matches `net.edges()` one to one
  /// (any order accepted).
  MeasurementSet(const Network& net, std::vector<Measurement> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Measurement& operator[](std::size_t edge_index) const { return entries_[edge_index]; }
  const std::vector<Measurement>& entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// True when every entry carries a LOS/NLOS label.
  bool fully_labeled() const;

  /// Stable 64-bit digest over edges, range bit patterns and labels.
  std::uint64_t hash() const;

  friend bool operator==(const MeasurementSet&, const MeasurementSet&);

private:
  std::vector<Measurement> entries_;
};

/// Draws one range per edge. Edges are visited in sorted order from a single
/// RNG stream seeded with `seed`; per edge the NLOS flag is drawn first, then
/// the bias (NLOS only), then the noise.
MeasurementSet synthesize(const Network& net, const NoiseModel& model, std::uint64_t seed);

/// Fraction of NLOS-labeled entries. Throws on an empty set.
double nlos_ratio(const MeasurementSet& ms);

}  // namespace huberloc
