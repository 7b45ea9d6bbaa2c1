#include "huberloc/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

namespace huberloc
{

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line)
{
  std::vector<std::string> out;
  std::string_view rest = line;
  while (true)
  {
    const auto comma = rest.find(',');
    out.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos)
      break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

struct CsvTable
{
  std::vector<std::string> header;
  // (line number, fields)
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

CsvTable read_csv(const fs::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (trim(line).empty() || trim(line).front() == '#')
      continue;
    if (table.header.empty())
      table.header = split_csv(line);
    else
      table.rows.emplace_back(lineno, split_csv(line));
  }
  if (table.header.empty())
    throw ParseError(fmt::format("{}: file is empty (expected a header row)", path.string()));
  return table;
}

void expect_header(const CsvTable& t, const fs::path& path, std::initializer_list<std::string_view> required,
                   std::initializer_list<std::string_view> optional = {})
{
  const std::size_t n = required.size();
  bool ok = t.header.size() >= n && t.header.size() <= n + optional.size();
  std::size_t k = 0;
  for (auto name : required)
    ok = ok && k < t.header.size() && t.header[k++] == name;
  for (auto name : optional)
    ok = ok && (k >= t.header.size() || t.header[k++] == name);
  if (!ok)
  {
    std::string want;
    for (auto name : required)
      want += (want.empty() ? "" : ",") + std::string(name);
    throw ParseError(fmt::format("{}:1: expected header '{}'", path.string(), want));
  }
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line, std::string_view field)
{
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw ParseError(fmt::format("{}:{}: field '{}' is not a number: '{}'", path.string(), line, field, s));
  return v;
}

long parse_long(const std::string& s, const fs::path& path, std::size_t line, std::string_view field)
{
  long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw ParseError(fmt::format("{}:{}: field '{}' is not an integer: '{}'", path.string(), line, field, s));
  return v;
}

std::ofstream open_out(const fs::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.precision(17);
  return out;
}

void finish(std::ofstream& out, const fs::path& path)
{
  out.flush();
  if (!out)
    throw IoError(fmt::format("write to '{}' failed", path.string()));
}

// Lossless number encoding: finite doubles as JSON numbers, the rest as strings.
json num(double v)
{
  if (std::isfinite(v))
    return v;
  if (std::isnan(v))
    return "nan";
  return v > 0 ? "inf" : "-inf";
}

double num_from(const json& j)
{
  if (j.is_number())
    return j.get<double>();
  if (j.is_string())
  {
    const auto s = j.get<std::string>();
    if (s == "nan")
      return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf")
      return std::numeric_limits<double>::infinity();
    if (s == "-inf")
      return -std::numeric_limits<double>::infinity();
  }
  throw ParseError(fmt::format("expected a number, got {}", j.dump()));
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<NodeRecord> read_nodes(const fs::path& path)
{
  const CsvTable t = read_csv(path);
  expect_header(t, path, {"id", "x_m", "y_m", "role"});
  std::vector<NodeRecord> nodes;
  for (const auto& [line, f] : t.rows)
  {
    if (f.size() != 4)
      throw ParseError(fmt::format("{}:{}: expected 4 fields, got {}", path.string(), line, f.size()));
    NodeRecord rec;
    rec.id = parse_long(f[0], path, line, "id");
    if (f[3] == "anchor")
      rec.anchor = true;
    else if (f[3] != "sensor")
      throw ParseError(fmt::format("{}:{}: field 'role' must be sensor or anchor, got '{}'", path.string(), line, f[3]));
    if (f[1].empty() != f[2].empty())
      throw ParseError(fmt::format("{}:{}: x_m and y_m must both be present or both empty", path.string(), line));
    if (!f[1].empty())
      rec.position = Position{parse_double(f[1], path, line, "x_m"), parse_double(f[2], path, line, "y_m")};
    if (rec.anchor && !rec.position)
      throw ParseError(fmt::format("{}:{}: anchor {} is missing coordinates", path.string(), line, rec.id));
    nodes.push_back(rec);
  }
  std::vector<long> ids;
  for (const auto& n : nodes)
    ids.push_back(n.id);
  std::sort(ids.begin(), ids.end());
  if (auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end())
    throw ParseError(fmt::format("{}: duplicate node id {}", path.string(), *dup));
  return nodes;
}

void write_nodes(const fs::path& path, const std::vector<NodeRecord>& nodes)
{
  auto out = open_out(path);
  out << "id,x_m,y_m,role\n";
  for (const auto& n : nodes)
  {
    out << n.id << ',';
    if (n.position)
      out << n.position->x << ',' << n.position->y;
    else
      out << ',';
    out << ',' << (n.anchor ? "anchor" : "sensor") << '\n';
  }
  finish(out, path);
}

std::vector<RangeRecord> read_ranges(const fs::path& path)
{
  const CsvTable t = read_csv(path);
  expect_header(t, path, {"i", "j", "range_m"}, {"label"});
  const bool labeled = t.header.size() == 4;
  std::vector<RangeRecord> ranges;
  for (const auto& [line, f] : t.rows)
  {
    if (f.size() != t.header.size())
      throw ParseError(
          fmt::format("{}:{}: expected {} fields, got {}", path.string(), line, t.header.size(), f.size()));
    RangeRecord rec;
    rec.i = parse_long(f[0], path, line, "i");
    rec.j = parse_long(f[1], path, line, "j");
    rec.range = parse_double(f[2], path, line, "range_m");
    if (labeled)
    {
      try
      {
        rec.label = parse_link_label(f[3]);
      }
      catch (const InvalidArgument& e)
      {
        throw ParseError(fmt::format("{}:{}: field 'label': {}", path.string(), line, e.what()));
      }
    }
    ranges.push_back(rec);
  }
  return ranges;
}

void write_ranges(const fs::path& path, const std::vector<RangeRecord>& ranges, bool with_labels)
{
  auto out = open_out(path);
  out << (with_labels ? "i,j,range_m,label\n" : "i,j,range_m\n");
  for (const auto& r : ranges)
  {
    out << r.i << ',' << r.j << ',' << r.range;
    if (with_labels)
      out << ',' << to_string(r.label);
    out << '\n';
  }
  finish(out, path);
}

Problem make_problem(const std::vector<NodeRecord>& nodes, const std::vector<RangeRecord>& ranges)
{
  std::vector<long> ids;
  std::vector<Position> anchors;
  std::vector<Position> truth;
  bool all_truth = true;
  for (const auto& n : nodes)
  {
    if (!n.anchor)
    {
      ids.push_back(n.id);
      if (n.position)
        truth.push_back(*n.position);
      else
        all_truth = false;
    }
  }
  const std::size_t num_sensors = ids.size();
  for (const auto& n : nodes)
  {
    if (n.anchor)
    {
      ids.push_back(n.id);
      anchors.push_back(*n.position);
    }
  }
  if (anchors.empty())
    throw ParseError("node list has no anchors");

  std::map<long, std::size_t> index;
  for (std::size_t k = 0; k < ids.size(); ++k)
    index[ids[k]] = k;

  std::vector<Edge> edges;
  std::vector<Measurement> entries;
  for (const auto& r : ranges)
  {
    auto a = index.find(r.i);
    auto b = index.find(r.j);
    if (a == index.end() || b == index.end())
      throw ParseError(fmt::format("range ({}, {}) references an unknown node id", r.i, r.j));
    if (r.i >= r.j)
      throw ParseError(fmt::format("range ({}, {}) must satisfy i < j", r.i, r.j));
    const Edge e{NodeId{a->second}, NodeId{b->second}};
    edges.push_back(e);
    entries.push_back({e, r.range, r.label});
  }
  std::optional<std::vector<Position>> truth_opt;
  if (all_truth)
    truth_opt = std::move(truth);
  try
  {
    Network net(num_sensors, std::move(anchors), std::move(edges), std::move(truth_opt));
    MeasurementSet ms(net, std::move(entries));
    return {std::move(net), std::move(ms), std::move(ids)};
  }
  catch (const InvalidArgument& e)
  {
    throw ParseError(e.what());
  }
}

Problem load_problem(const fs::path& nodes_path, const fs::path& ranges_path)
{
  return make_problem(read_nodes(nodes_path), read_ranges(ranges_path));
}

void save_problem(const fs::path& dir, const Problem& problem)
{
  fs::create_directories(dir);
  const auto& net = problem.net;
  std::vector<NodeRecord> nodes;
  for (std::size_t k = 0; k < net.num_nodes(); ++k)
  {
    const NodeId id{k};
    NodeRecord rec{problem.ids[k], std::nullopt, net.is_anchor(id)};
    if (rec.anchor || net.has_truth())
      rec.position = net.true_position(id);
    nodes.push_back(rec);
  }
  write_nodes(dir / "nodes.csv", nodes);

  std::vector<RangeRecord> ranges;
  for (const auto& m : problem.ms)
  {
    const auto [i, j] = std::minmax(problem.ids[m.edge.first.value], problem.ids[m.edge.second.value]);
    ranges.push_back({i, j, m.range, m.label});
  }
  write_ranges(dir / "ranges.csv", ranges, problem.ms.fully_labeled() && !problem.ms.empty());
}

void write_estimates(const fs::path& path, const Problem& problem, const std::vector<Position>& estimates,
                     const std::string& comment)
{
  auto out = open_out(path);
  if (!comment.empty())
    out << "# " << comment << '\n';
  out << "id,x_m,y_m\n";
  for (std::size_t i = 0; i < estimates.size(); ++i)
    out << problem.ids[i] << ',' << estimates[i].x << ',' << estimates[i].y << '\n';
  finish(out, path);
}

std::vector<Position> read_estimates(const fs::path& path, const Problem& problem)
{
  const CsvTable t = read_csv(path);
  expect_header(t, path, {"id", "x_m", "y_m"});
  std::map<long, Position> by_id;
  for (const auto& [line, f] : t.rows)
  {
    if (f.size() != 3)
      throw ParseError(fmt::format("{}:{}: expected 3 fields, got {}", path.string(), line, f.size()));
    by_id[parse_long(f[0], path, line, "id")] =
        Position{parse_double(f[1], path, line, "x_m"), parse_double(f[2], path, line, "y_m")};
  }
  std::vector<Position> out;
  for (std::size_t i = 0; i < problem.net.num_sensors(); ++i)
  {
    auto it = by_id.find(problem.ids[i]);
    if (it == by_id.end())
      throw ParseError(fmt::format("{}: no estimate for sensor {}", path.string(), problem.ids[i]));
    out.push_back(it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t DatasetBundle::num_anchors() const
{
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const NodeRecord& n) { return n.anchor; }));
}

DatasetBundle load_dataset(const fs::path& dir)
{
  DatasetBundle bundle;
  bundle.name = dir.filename().string();
  const fs::path meta = dir / "bundle.json";
  if (fs::exists(meta))
  {
    std::ifstream in(meta);
    json j;
    try
    {
      j = json::parse(in);
      bundle.name = j.value("name", bundle.name);
      bundle.surrogate = j.value("surrogate", false);
      if (j.contains("avg_bias_m"))
        bundle.avg_bias = j.at("avg_bias_m").get<double>();
      bundle.sigma_n = j.value("sigma_n_m", 1.0);
    }
    catch (const json::exception& e)
    {
      throw ParseError(fmt::format("{}: {}", meta.string(), e.what()));
    }
  }

  bundle.nodes = read_nodes(dir / "nodes.csv");
  if (bundle.nodes.empty())
    throw ParseError(fmt::format("{}: no nodes", (dir / "nodes.csv").string()));
  if (bundle.num_anchors() == 0)
    throw ParseError(fmt::format("{}: no anchor nodes", (dir / "nodes.csv").string()));

  std::map<long, bool> known;
  for (const auto& n : bundle.nodes)
    known[n.id] = true;

  const fs::path ranges_path = dir / "ranges.csv";
  const auto raw = read_ranges(ranges_path);
  if (raw.empty())
    throw ParseError(fmt::format("{}: no range measurements", ranges_path.string()));

  // merge both directions of a pair
  std::map<std::pair<long, long>, std::vector<RangeRecord>> pairs;
  for (const auto& r : raw)
  {
    if (!known.count(r.i) || !known.count(r.j))
      throw ParseError(fmt::format("{}: range ({}, {}) references an unknown node", ranges_path.string(), r.i, r.j));
    if (r.i == r.j)
      throw ParseError(fmt::format("{}: diagonal entry ({}, {})", ranges_path.string(), r.i, r.j));
    pairs[{std::min(r.i, r.j), std::max(r.i, r.j)}].push_back(r);
  }
  for (const auto& [key, recs] : pairs)
  {
    double sum = 0.0;
    double lo = recs.front().range;
    double hi = lo;
    for (const auto& r : recs)
    {
      sum += r.range;
      lo = std::min(lo, r.range);
      hi = std::max(hi, r.range);
    }
    if (hi - lo > 3.0 * bundle.sigma_n)
      bundle.warnings.push_back(fmt::format("pair ({}, {}) directions differ by {:.3f} m (> 3 sigma_n)", key.first,
                                            key.second, hi - lo));
    bundle.ranges.push_back({key.first, key.second, sum / static_cast<double>(recs.size()), recs.front().label});
  }
  return bundle;
}

void save_dataset(const fs::path& dir, const DatasetBundle& bundle)
{
  fs::create_directories(dir);
  write_nodes(dir / "nodes.csv", bundle.nodes);
  const bool labeled = std::all_of(bundle.ranges.begin(), bundle.ranges.end(),
                                   [](const RangeRecord& r) { return r.label != LinkLabel::Unknown; });
  write_ranges(dir / "ranges.csv", bundle.ranges, labeled && !bundle.ranges.empty());
  json meta{{"name", bundle.name}, {"surrogate", bundle.surrogate}, {"sigma_n_m", bundle.sigma_n}};
  if (bundle.avg_bias)
    meta["avg_bias_m"] = *bundle.avg_bias;
  auto out = open_out(dir / "bundle.json");
  out << meta.dump(2) << '\n';
  finish(out, dir / "bundle.json");
}

DatasetBundle make_surrogate_dataset(std::uint64_t seed, double nlos_prob, double bias_mean)
{
  constexpr double kWidth = 14.0;
  constexpr double kHeight = 13.0;
  constexpr std::size_t kSensors = 40;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, kWidth);
  std::uniform_real_distribution<double> uy(0.0, kHeight);

  DatasetBundle bundle;
  bundle.name = "surrogate-office-44";
  bundle.surrogate = true;
  bundle.sigma_n = 1.0;
  for (std::size_t k = 0; k < kSensors; ++k)
  {
    const double x = ux(rng);
    const double y = uy(rng);
    bundle.nodes.push_back({static_cast<long>(k + 1), Position{x, y}, false});
  }
  const Position corners[] = {{0.0, 0.0}, {kWidth, 0.0}, {kWidth, kHeight}, {0.0, kHeight}};
  for (std::size_t k = 0; k < 4; ++k)
    bundle.nodes.push_back({static_cast<long>(kSensors + k + 1), corners[k], true});

  std::vector<Position> positions;
  for (const auto& n : bundle.nodes)
    positions.push_back(*n.position);
  const Network net = build_topology(positions, kSensors, kFullConnectivity);
  const MeasurementSet ms = synthesize(net, NoiseModel{bundle.sigma_n, nlos_prob, bias_mean}, derive_seed(seed, 1));

  double bias_sum = 0.0;
  for (const auto& m : ms)
  {
    bundle.ranges.push_back(
        {bundle.nodes[m.edge.first.value].id, bundle.nodes[m.edge.second.value].id, m.range, m.label});
    bias_sum += m.range - distance(positions[m.edge.first.value], positions[m.edge.second.value]);
  }
  bundle.avg_bias = bias_sum / static_cast<double>(ms.size());
  return bundle;
}

std::string_view to_string(DebiasMode mode)
{
  switch (mode)
  {
    case DebiasMode::Raw:
      return "raw";
    case DebiasMode::HalfDebiased:
      return "half";
    case DebiasMode::FullDebiased:
      return "full";
  }
  return "?";
}

DebiasMode parse_debias_mode(std::string_view text)
{
  for (auto m : {DebiasMode::Raw, DebiasMode::HalfDebiased, DebiasMode::FullDebiased})
  {
    if (text == to_string(m))
      return m;
  }
  throw InvalidArgument(fmt::format("unknown debias mode '{}' (expected raw, half or full)", text));
}

Problem apply_debias(const DatasetBundle& bundle, DebiasMode mode, double avg_bias, std::uint64_t seed)
{
  if (!(avg_bias >= 0.0))
    throw InvalidArgument(fmt::format("average bias must be >= 0, got {}", avg_bias));
  std::vector<RangeRecord> ranges = bundle.ranges;
  const std::size_t e = ranges.size();

  std::vector<bool> shift(e, mode == DebiasMode::FullDebiased);
  if (mode == DebiasMode::HalfDebiased)
  {
    std::vector<std::size_t> order(e);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < e / 2; ++k)
      shift[order[k]] = true;
  }
  for (std::size_t k = 0; k < e; ++k)
  {
    if (shift[k])
      ranges[k].range -= avg_bias;
  }
  return make_problem(bundle.nodes, ranges);
}

// ---------------------------------------------------------------------------

namespace
{

class JsonReader
{
public:
  JsonReader(const json& j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j_.is_object())
      throw ParseError(fmt::format("{}: expected an object", path_.empty() ? "<root>" : path_));
  }

  std::string field(std::string_view key) const
  {
    return path_.empty() ? std::string(key) : fmt::format("{}.{}", path_, key);
  }

  template <typename T>
  void get(std::string_view key, T& out)
  {
    seen_.emplace_back(key);
    auto it = j_.find(std::string(key));
    if (it == j_.end())
      return;
    try
    {
      out = it->template get<T>();
    }
    catch (const json::exception&)
    {
      throw ParseError(fmt::format("{}: wrong type ({})", field(key), it->dump()));
    }
  }

  void get_number(std::string_view key, double& out)
  {
    seen_.emplace_back(key);
    auto it = j_.find(std::string(key));
    if (it == j_.end())
      return;
    try
    {
      out = num_from(*it);
    }
    catch (const ParseError&)
    {
      throw ParseError(fmt::format("{}: expected a number, got {}", field(key), it->dump()));
    }
  }

  const json* child(std::string_view key)
  {
    seen_.emplace_back(key);
    auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  void reject_unknown() const
  {
    for (auto it = j_.begin(); it != j_.end(); ++it)
    {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw ParseError(fmt::format("{}: unknown field", field(it.key())));
    }
  }

private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

template <typename Fn>
auto with_field(const std::string& field, Fn&& fn)
{
  try
  {
    return fn();
  }
  catch (const InvalidArgument& e)
  {
    throw ParseError(fmt::format("{}: {}", field, e.what()));
  }
}

}  // namespace

json to_json(const StageConfig& cfg)
{
  return {{"loss", to_string(cfg.loss)},
          {"step", cfg.step},
          {"alpha", cfg.alpha},
          {"max_iters", cfg.max_iters},
          {"conv_threshold_m", num(cfg.conv_threshold)}};
}

StageConfig stage_from_json(const json& j, const std::string& path, const StageConfig& base)
{
  JsonReader r(j, path);
  StageConfig cfg = base;
  std::string loss(to_string(cfg.loss));
  r.get("loss", loss);
  cfg.loss = with_field(r.field("loss"), [&] { return parse_loss_kind(loss); });
  r.get_number("step", cfg.step);
  r.get_number("alpha", cfg.alpha);
  r.get("max_iters", cfg.max_iters);
  r.get_number("conv_threshold_m", cfg.conv_threshold);
  r.reject_unknown();
  return cfg;
}

json to_json(const ScenarioConfig& cfg)
{
  json anchors = json::array();
  for (const auto& a : cfg.anchors)
    anchors.push_back({a.x, a.y});
  return {{"area_side_m", cfg.area_side},
          {"num_sensors", cfg.num_sensors},
          {"anchors", anchors},
          {"placement", to_string(cfg.placement)},
          {"placement_seed", cfg.placement_seed},
          {"comm_radius_m", num(cfg.comm_radius)},
          {"noise",
           {{"sigma_n_m", cfg.noise.sigma_n}, {"nlos_prob", cfg.noise.nlos_prob}, {"bias_mean_m", cfg.noise.bias_mean}}},
          {"solver_sigma_n_m", cfg.solver_sigma_n ? json(*cfg.solver_sigma_n) : json(nullptr)},
          {"init_std_m", cfg.init_std},
          {"mc_runs", cfg.mc_runs},
          {"schedule", to_string(cfg.schedule)},
          {"stage1", to_json(cfg.stage1)},
          {"stage2", to_json(cfg.stage2)},
          {"relaxed_nls", to_json(cfg.relaxed_nls)},
          {"raw_huber", to_json(cfg.raw_huber)},
          {"pocs_iters", cfg.pocs_iters},
          {"oracle", to_json(cfg.oracle)},
          {"oracle_pocs_iters", cfg.oracle_pocs_iters}};
}

ScenarioConfig scenario_from_json(const json& j)
{
  JsonReader r(j, "");
  ScenarioConfig cfg;
  r.get_number("area_side_m", cfg.area_side);
  r.get("num_sensors", cfg.num_sensors);
  if (const json* anchors = r.child("anchors"))
  {
    if (!anchors->is_array())
      throw ParseError("anchors: expected an array of [x, y] pairs");
    cfg.anchors.clear();
    for (std::size_t k = 0; k < anchors->size(); ++k)
    {
      const json& a = (*anchors)[k];
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
        throw ParseError(fmt::format("anchors[{}]: expected [x, y]", k));
      cfg.anchors.push_back({a[0].get<double>(), a[1].get<double>()});
    }
  }
  std::string placement(to_string(cfg.placement));
  r.get("placement", placement);
  cfg.placement = with_field("placement", [&] { return parse_placement(placement); });
  r.get("placement_seed", cfg.placement_seed);
  if (const json* radius = r.child("comm_radius_m"); radius && !radius->is_null())
  {
    cfg.comm_radius = with_field("comm_radius_m", [&] {
      try
      {
        return num_from(*radius);
      }
      catch (const ParseError&)
      {
        throw InvalidArgument("expected a number, \"inf\" or null");
      }
    });
  }
  if (const json* noise = r.child("noise"))
  {
    JsonReader nr(*noise, "noise");
    nr.get_number("sigma_n_m", cfg.noise.sigma_n);
    nr.get_number("nlos_prob", cfg.noise.nlos_prob);
    nr.get_number("bias_mean_m", cfg.noise.bias_mean);
    nr.reject_unknown();
  }
  if (const json* s = r.child("solver_sigma_n_m"); s && !s->is_null())
  {
    if (!s->is_number())
      throw ParseError("solver_sigma_n_m: expected a number or null");
    cfg.solver_sigma_n = s->get<double>();
  }
  r.get_number("init_std_m", cfg.init_std);
  r.get("mc_runs", cfg.mc_runs);
  std::string schedule(to_string(cfg.schedule));
  r.get("schedule", schedule);
  cfg.schedule = with_field("schedule", [&] { return parse_schedule(schedule); });
  if (const json* s = r.child("stage1"))
    cfg.stage1 = stage_from_json(*s, "stage1", cfg.stage1);
  if (const json* s = r.child("stage2"))
    cfg.stage2 = stage_from_json(*s, "stage2", cfg.stage2);
  if (const json* s = r.child("relaxed_nls"))
    cfg.relaxed_nls = stage_from_json(*s, "relaxed_nls", cfg.relaxed_nls);
  if (const json* s = r.child("raw_huber"))
    cfg.raw_huber = stage_from_json(*s, "raw_huber", cfg.raw_huber);
  r.get("pocs_iters", cfg.pocs_iters);
  if (const json* s = r.child("oracle"))
    cfg.oracle = stage_from_json(*s, "oracle", cfg.oracle);
  r.get("oracle_pocs_iters", cfg.oracle_pocs_iters);
  r.reject_unknown();

  try
  {
    cfg.validate();
  }
  catch (const InvalidArgument& e)
  {
    throw ParseError(e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario(const fs::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  json j;
  try
  {
    j = json::parse(in);
  }
  catch (const json::parse_error& e)
  {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  // files written by simulate wrap the config next to the seed
  if (j.is_object() && j.contains("config") && j.contains("seed"))
    j = j.at("config");
  try
  {
    return scenario_from_json(j);
  }
  catch (const ParseError& e)
  {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

// ---------------------------------------------------------------------------

namespace
{

json to_json(const RunRecord& r)
{
  json stages = json::array();
  for (const auto& s : r.stages)
    stages.push_back({{"name", s.name}, {"rounds", s.rounds}, {"reason", to_string(s.reason)}, {"final_cost", num(s.final_cost)}});
  json errors = json::array();
  for (double e : r.sensor_errors)
    errors.push_back(num(e));
  return {{"record", "run"},
          {"index", r.index},
          {"seed", r.seed},
          {"measurement_hash", r.measurement_hash},
          {"nlos_ratio", num(r.nlos_ratio)},
          {"failed", r.failed},
          {"failure", r.failure},
          {"network_error", num(r.network_error)},
          {"sensor_errors", errors},
          {"stages", stages}};
}

RunRecord run_from_json(const json& j)
{
  RunRecord r;
  r.index = j.at("index").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.measurement_hash = j.at("measurement_hash").get<std::uint64_t>();
  r.nlos_ratio = num_from(j.at("nlos_ratio"));
  r.failed = j.at("failed").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  r.network_error = num_from(j.at("network_error"));
  for (const auto& e : j.at("sensor_errors"))
    r.sensor_errors.push_back(num_from(e));
  for (const auto& s : j.at("stages"))
    r.stages.push_back({s.at("name").get<std::string>(), s.at("rounds").get<std::size_t>(),
                        parse_termination(s.at("reason").get<std::string>()), num_from(s.at("final_cost"))});
  return r;
}

}  // namespace

void save_report(const fs::path& path, const RunReport& report, const json& config_echo)
{
  auto out = open_out(path);
  out << json{{"record", "header"},
              {"schema", "huberloc.run_report"},
              {"version", kReportSchemaVersion},
              {"method", report.method},
              {"config", config_echo}}
             .dump()
      << '\n';
  for (const auto& run : report.runs)
    out << to_json(run).dump() << '\n';
  json quantiles = json::object();
  for (const auto& [k, v] : report.quantiles)
    quantiles[k] = num(v);
  json sorted = json::array();
  for (double e : report.sorted_errors)
    sorted.push_back(num(e));
  out << json{{"record", "aggregate"},
              {"failures", report.failures},
              {"median", num(report.median)},
              {"mean", num(report.mean)},
              {"quantiles", quantiles},
              {"sorted_errors", sorted}}
             .dump()
      << '\n';
  finish(out, path);
}

RunReport load_report(const fs::path& path, json* config_echo)
{
  std::ifstream in(path);
  if (!in)
    throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  RunReport report;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  bool have_aggregate = false;
  while (std::getline(in, line))
  {
    ++lineno;
    if (trim(line).empty())
      continue;
    try
    {
      const json j = json::parse(line);
      const auto kind = j.at("record").get<std::string>();
      if (!have_header)
      {
        if (kind != "header" || j.at("schema").get<std::string>() != "huberloc.run_report")
          throw ParseError("first record must be the run_report header");
        const int version = j.at("version").get<int>();
        if (version != kReportSchemaVersion)
          throw SchemaError(fmt::format("{}: report schema version {} is not supported (expected {})", path.string(),
                                        version, kReportSchemaVersion));
        report.method = j.at("method").get<std::string>();
        if (config_echo)
          *config_echo = j.value("config", json::object());
        have_header = true;
      }
      else if (kind == "run")
      {
        report.runs.push_back(run_from_json(j));
      }
      else if (kind == "aggregate")
      {
        report.failures = j.at("failures").get<std::size_t>();
        report.median = num_from(j.at("median"));
        report.mean = num_from(j.at("mean"));
        for (auto it = j.at("quantiles").begin(); it != j.at("quantiles").end(); ++it)
          report.quantiles[it.key()] = num_from(it.value());
        for (const auto& e : j.at("sorted_errors"))
          report.sorted_errors.push_back(num_from(e));
        have_aggregate = true;
      }
      else
      {
        throw ParseError(fmt::format("unknown record kind '{}'", kind));
      }
    }
    catch (const json::exception& e)
    {
      throw ParseError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
    catch (const SchemaError&)
    {
      throw;
    }
    catch (const ParseError& e)
    {
      throw ParseError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  if (!have_header)
    throw ParseError(fmt::format("{}: empty report", path.string()));
  if (!have_aggregate)
    throw ParseError(fmt::format("{}: missing aggregate record", path.string()));
  return report;
}

void save_trace(const fs::path& path, const std::vector<std::pair<std::string, SolveTrace>>& stages,
                const json& config_echo)
{
  auto out = open_out(path);
  out << json{{"record", "header"}, {"schema", "huberloc.trace"}, {"version", kReportSchemaVersion}, {"config", config_echo}}
             .dump()
      << '\n';
  for (const auto& [name, trace] : stages)
  {
    for (std::size_t k = 0; k < trace.cost.size(); ++k)
    {
      out << json{{"record", "round"},
                  {"stage", name},
                  {"round", k + 1},
                  {"cost", num(trace.cost[k])},
                  {"max_displacement", num(trace.max_displacement[k])}}
                 .dump()
          << '\n';
    }
    out << json{{"record", "termination"},
                {"stage", name},
                {"rounds", trace.rounds},
                {"reason", to_string(trace.reason)},
                {"warnings", trace.warnings}}
               .dump()
        << '\n';
  }
  finish(out, path);
}

}  // namespace huberloc
