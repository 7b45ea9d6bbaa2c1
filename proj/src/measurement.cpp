#include "huberloc/measurement.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include <fmt/format.h>

namespace huberloc
{

std::string_view to_string(LinkLabel label)
{
  switch (label)
  {
    case LinkLabel::Los:
      return "los";
    case LinkLabel::Nlos:
      return "nlos";
    case LinkLabel::Unknown:
      break;
  }
  return "unknown";
}

LinkLabel parse_link_label(std::string_view text)
{
  if (text == "los" || text == "LOS")
    return LinkLabel::Los;
  if (text == "nlos" || text == "NLOS")
    return LinkLabel::Nlos;
  if (text.empty() || text == "unknown")
    return LinkLabel::Unknown;
  throw InvalidArgument(fmt::format("unknown link label '{}'", text));
}

void NoiseModel::validate() const
{
  if (!(sigma_n >= 0.0) || !std::isfinite(sigma_n))
    throw InvalidArgument(fmt::format("noise.sigma_n must be a finite value >= 0, got {}", sigma_n));
  if (!(nlos_prob >= 0.0 && nlos_prob <= 1.0))
    throw InvalidArgument(fmt::format("noise.nlos_prob must lie in [0, 1], got {}", nlos_prob));
  if (!(bias_mean > 0.0) || !std::isfinite(bias_mean))
    throw InvalidArgument(fmt::format("noise.bias_mean must be > 0, got {}", bias_mean));
}

MeasurementSet::MeasurementSet(const Network& net, std::vector<Measurement> entries) : entries_(std::move(entries))
{
  for (auto& m : entries_)
    m.edge = make_edge(m.edge.first, m.edge.second);
  std::sort(entries_.begin(), entries_.end(),
            [](const Measurement& a, const Measurement& b) { return a.edge < b.edge; });
  const auto& edges = net.edges();
  if (entries_.size() != edges.size())
    throw InvalidArgument(
        fmt::format("measurement count {} does not match edge count {}", entries_.size(), edges.size()));
  for (std::size_t k = 0; k < edges.size(); ++k)
  {
    if (entries_[k].edge != edges[k])
      throw InvalidArgument(fmt::format("measurement ({}, {}) has no matching network edge",
                                        entries_[k].edge.first.value, entries_[k].edge.second.value));
  }
}

bool MeasurementSet::fully_labeled() const
{
  return std::none_of(entries_.begin(), entries_.end(),
                      [](const Measurement& m) { return m.label == LinkLabel::Unknown; });
}

std::uint64_t MeasurementSet::hash() const
{
  // FNV-1a over 64-bit words
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b)
    {
      h ^= (word >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& m : entries_)
  {
    mix(m.edge.first.value);
    mix(m.edge.second.value);
    mix(std::bit_cast<std::uint64_t>(m.range));
    mix(static_cast<std::uint64_t>(m.label));
  }
  return h;
}

bool operator==(const MeasurementSet& a, const MeasurementSet& b)
{
  if (a.size() != b.size())
    return false;
  for (std::size_t k = 0; k < a.size(); ++k)
  {
    const auto& x = a.entries_[k];
    const auto& y = b.entries_[k];
    if (x.edge != y.edge || x.label != y.label ||
        std::bit_cast<std::uint64_t>(x.range) != std::bit_cast<std::uint64_t>(y.range))
      return false;
  }
  return true;
}

MeasurementSet synthesize(const Network& net, const NoiseModel& model, std::uint64_t seed)
{
  model.validate();
  if (!net.has_truth())
    throw InvalidArgument("synthesize requires ground-truth sensor positions");

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution is_nlos(model.nlos_prob);
  std::exponential_distribution<double> bias(1.0 / model.bias_mean);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<Measurement> entries;
  entries.reserve(net.edges().size());
  for (const auto& e : net.edges())
  {
    const double d = distance(net.true_position(e.first), net.true_position(e.second));
    const bool nlos = is_nlos(rng);
    const double b = nlos ? bias(rng) : 0.0;
    const double n = model.sigma_n * noise(rng);
    entries.push_back({e, d + b + n, nlos ? LinkLabel::Nlos : LinkLabel::Los});
  }
  return MeasurementSet(net, std::move(entries));
}

double nlos_ratio(const MeasurementSet& ms)
{
  if (ms.empty())
    throw InvalidArgument("nlos_ratio of an empty measurement set");
  const auto count = std::count_if(ms.begin(), ms.end(), [](const Measurement& m) { return m.label == LinkLabel::Nlos; });
  return static_cast<double>(count) / static_cast<double>(ms.size());
}

}  // namespace huberloc
