#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flysafe/metrics.hpp"
#include "flysafe/simkernel.hpp"

namespace flysafe {

/// Validation failure tied to a dotted JSON path such as "adversary.offset.dx".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ScenarioConfig {
  double area_x = 1500.0;
  double area_y = 1500.0;
  int n_uavs = 40;
  double speed = 20.0;
  double altitude_m = 91.44;
  double range_m = 115.0;
  double lambda_s = 1.5;
  double lambda_min = 0.5;
  double lambda_max = 3.0;
  double sim_time_s = 1200.0;
  int runs = 35;
  std::uint64_t seed = 1;
  double loss_prob = 0.0;
  double latency_min_s = 5e-5;
  double latency_max_s = 5e-3;
  AdversaryConfig adversary;
  DetectorConfig detector;
  bool gt_excludes_blocked = false;
  ProtocolConfig protocol;

  KernelConfig kernel(std::uint64_t run_seed) const;
  MetricsOptions metrics_options() const { return {gt_excludes_blocked}; }
  /// Every field, defaults included. Round-trips through parse_config.
  nlohmann::json to_json() const;
};

/// Overlays `j` on `base`, then validates. Throws ConfigError.
ScenarioConfig parse_config(const nlohmann::json& j, ScenarioConfig base = {});
ScenarioConfig load_config(const std::filesystem::path& path, ScenarioConfig base = {});
void validate(const ScenarioConfig& cfg);

/// "baseline" or "baseattk"; throws ConfigError("preset", ...) otherwise.
ScenarioConfig preset(std::string_view name);

std::string config_hash(const ScenarioConfig& cfg);

// ---- campaign ----

struct RunResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<NodeMetrics> nodes;
  std::string trace_hash;
  /// Nodes that drew at least one false verdict, with their Γ confusion.
  std::vector<std::pair<UavId, ConfusionMatrix>> flagged;
};

RunResult run_single(const ScenarioConfig& cfg, std::size_t index);

struct MetricStats {
  std::size_t n = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0;  // sample standard deviation
  double ci95 = 0.0;    // half-width, Student t; NaN when n < 2
};

/// NaN samples are skipped; n = 0 gives all-NaN stats.
MetricStats describe(const std::vector<double>& samples);

/// Column names of metrics_run<k>.csv after node_id, in order.
const std::vector<std::string>& metric_columns();
std::vector<double> metric_values(const NodeMetrics& m);

std::string metrics_csv(const std::vector<NodeMetrics>& nodes);
std::string confusion_csv(const ConfusionMatrix& m);

/// Stats per metric column, pooling node rows of every run.
std::map<std::string, MetricStats> summarize(const std::vector<RunResult>& runs);

struct CampaignReport {
  std::vector<RunResult> runs;
  std::map<std::string, MetricStats> summary;
  std::vector<std::filesystem::path> files;
};

/// Runs seeds seed .. seed+runs-1 (parallel, capped by FLYSAFE_THREADS) and
/// writes metrics_run<k>.csv, confusion_run<k>_node<id>.csv, summary.json and
/// manifest.json into out_dir.
CampaignReport run_campaign(const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

/// Worker count: FLYSAFE_THREADS when set and positive, else the hardware count.
unsigned campaign_threads(std::size_t jobs);

// ---- compare ----

struct MetricDelta {
  std::string key;
  std::string stat;  // "mean" or "min"
  double a = 0.0;
  double b = 0.0;
  double abs_delta = 0.0;  // b - a
  double rel_delta = 0.0;  // (b - a) / |a|; 0 when equal, NaN when a = 0 != b
};

nlohmann::json load_summary(const std::filesystem::path& path);
/// Throws std::invalid_argument listing keys present on one side only.
std::vector<MetricDelta> compare(const nlohmann::json& summary_a, const nlohmann::json& summary_b);
std::string format_deltas(const std::vector<MetricDelta>& deltas);
nlohmann::json deltas_json(const std::vector<MetricDelta>& deltas);

}  // namespace flysafe
