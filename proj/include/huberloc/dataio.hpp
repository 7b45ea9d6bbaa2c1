#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "huberloc/eval.hpp"

namespace huberloc
{

/// Malformed or inconsistent input file; the message carries path, line
/// and field.
class ParseError : public Error
{
public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error
{
public:
  using Error::Error;
};

/// Report or config written by an incompatible schema version.
class SchemaError : public Error
{
public:
  using Error::Error;
};

inline constexpr int kReportSchemaVersion = 1;

// ---------------------------------------------------------------------------
// node / range files

struct NodeRecord
{
  long id = 0;
  std::optional<Position> position;
  bool anchor = false;
};

struct RangeRecord
{
  long i = 0;
  long j = 0;
  double range = 0.0;
  LinkLabel label = LinkLabel::Unknown;
};

/// A localization problem loaded from or written to disk. Internal node
/// order is sensors (file order) then anchors; `ids` maps back to file ids.
struct Problem
{
  Network net;
  MeasurementSet ms;
  std::vector<long> ids;
};

/// `id,x_m,y_m,role`. Sensor coordinates may be left empty when unknown.
std::vector<NodeRecord> read_nodes(const std::filesystem::path& path);
void write_nodes(const std::filesystem::path& path, const std::vector<NodeRecord>& nodes);

/// `i,j,range_m` with an optional trailing `label` column (los/nlos).
std::vector<RangeRecord> read_ranges(const std::filesystem::path& path);
void write_ranges(const std::filesystem::path& path, const std::vector<RangeRecord>& ranges, bool with_labels);

/// Builds a problem from node and range records. Requires i < j and one
/// record per pair.
Problem make_problem(const std::vector<NodeRecord>& nodes, const std::vector<RangeRecord>& ranges);
Problem load_problem(const std::filesystem::path& nodes_path, const std::filesystem::path& ranges_path);
/// Writes nodes.csv and ranges.csv (with labels when known) under `dir`.
void save_problem(const std::filesystem::path& dir, const Problem& problem);

/// Sensor estimates as `id,x_m,y_m`, optionally preceded by a `# comment`
/// line (skipped by every reader).
void write_estimates(const std::filesystem::path& path, const Problem& problem,
                     const std::vector<Position>& estimates, const std::string& comment = {});
std::vector<Position> read_estimates(const std::filesystem::path& path, const Problem& problem);

// ---------------------------------------------------------------------------
// measurement-campaign bundles

/// Directory with nodes.csv, ranges.csv and an optional bundle.json
/// ({"name", "surrogate", "avg_bias_m", "sigma_n_m"}). Ranges may list both
/// directions of a pair; they are averaged on load.
struct DatasetBundle
{
  std::string name;
  bool surrogate = false;
  std::vector<NodeRecord> nodes;
  /// One record per pair, i < j.
  std::vector<RangeRecord> ranges;
  std::optional<double> avg_bias;
  double sigma_n = 1.0;
  std::vector<std::string> warnings;

  std::size_t num_anchors() const;
  std::size_t num_sensors() const { return nodes.size() - num_anchors(); }
};

/// Pairs measured in both directions whose ranges differ by more than
/// 3 sigma_n are listed in `warnings`.
DatasetBundle load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const DatasetBundle& bundle);

/// Office-scale stand-in for the 44-node campaign: 40 sensors uniform on a
/// 14 m x 13 m floor, anchors in the four corners, all pairs measured with
/// sigma_n = 1 m noise and, with probability `nlos_prob`, an exponential
/// positive bias of mean `bias_mean`. Marked as surrogate.
DatasetBundle make_surrogate_dataset(std::uint64_t seed, double nlos_prob = 0.9, double bias_mean = 3.0);

enum class DebiasMode
{
  Raw,
  HalfDebiased,
  FullDebiased,
};

std::string_view to_string(DebiasMode mode);
DebiasMode parse_debias_mode(std::string_view text);

/// Subtracts `avg_bias` from no link (Raw), from floor(E/2) links chosen
/// uniformly by `seed` (HalfDebiased) or from every link (FullDebiased).
/// Topology is untouched.
Problem apply_debias(const DatasetBundle& bundle, DebiasMode mode, double avg_bias, std::uint64_t seed);

// ---------------------------------------------------------------------------
// configs, reports and traces

nlohmann::json to_json(const StageConfig& cfg);
/// Fields missing from `j` are taken from `base`.
StageConfig stage_from_json(const nlohmann::json& j, const std::string& path, const StageConfig& base = {});

nlohmann::json to_json(const ScenarioConfig& cfg);
/// Missing fields keep their defaults; unknown fields and type errors throw
/// ParseError naming the field path. The result is validated.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
/// Also accepts the scenario.json written by `simulate` ({"config", "seed"}).
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Line-delimited JSON: a header record (schema, version, method, config
/// echo), one record per run, one aggregate record.
void save_report(const std::filesystem::path& path, const RunReport& report,
                 const nlohmann::json& config_echo = nlohmann::json::object());
RunReport load_report(const std::filesystem::path& path, nlohmann::json* config_echo = nullptr);

/// One record per executed round, then one termination record per stage.
void save_trace(const std::filesystem::path& path, const std::vector<std::pair<std::string, SolveTrace>>& stages,
                const nlohmann::json& config_echo = nlohmann::json::object());

}  // namespace huberloc
