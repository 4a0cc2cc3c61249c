#include "flysafe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "flysafe/content_hash.hpp"

namespace flysafe {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Strict object reader: every key must be consumed or finish() rejects it.
class Reader {
 public:
  Reader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) throw ConfigError(path(key), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        throw ConfigError(path(key), "integer out of range");
      }
      out = static_cast<int>(x);
    }
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(path(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  std::optional<std::string> string(const std::string& key) {
    if (const json* v = get(key)) {
      if (!v->is_string()) throw ConfigError(path(key), "expected a string");
      return v->get<std::string>();
    }
    return std::nullopt;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (seen_.count(it.key()) == 0) throw ConfigError(path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

double json_number(const json& j) { return j.is_number() ? j.get<double>() : kNaN; }

}  // namespace

// ---- config ----

KernelConfig ScenarioConfig::kernel(std::uint64_t run_seed) const {
  KernelConfig k;
  k.slot = {lambda_s, lambda_min, lambda_max};
  k.radio = {range_m, loss_prob, latency_min_s, latency_max_s};
  k.area = {0.0, area_x, 0.0, area_y};
  k.altitude_m = altitude_m;
  k.speed = speed;
  k.protocol = protocol;
  k.adversary = adversary;
  k.detector = detector;
  k.seed = run_seed;
  return k;
}

json ScenarioConfig::to_json() const {
  json ids = json::array();
  for (UavId id : adversary.malicious_ids) ids.push_back(id.value);
  return json{
      {"area", {{"x", area_x}, {"y", area_y}}},
      {"n_uavs", n_uavs},
      {"speed", speed},
      {"altitude_m", altitude_m},
      {"range_m", range_m},
      {"lambda_s", lambda_s},
      {"lambda_min", lambda_min},
      {"lambda_max", lambda_max},
      {"sim_time_s", sim_time_s},
      {"runs", runs},
      {"seed", seed},
      {"loss_prob", loss_prob},
      {"latency", {{"min_s", latency_min_s}, {"max_s", latency_max_s}}},
      {"adversary",
       {{"malicious_ids", ids},
        {"strategy", std::string(to_string(adversary.strategy))},
        {"offset", {{"dx", adversary.offset_dx}, {"dy", adversary.offset_dy}}},
        {"active_from", adversary.active_from},
        {"active_until", number_or_null(adversary.active_until)}}},
      {"detector",
       {{"mode", std::string(to_string(detector.mode))},
        {"vmax", detector.vmax},
        {"slack", detector.slack}}},
      {"gt_excludes_blocked", gt_excludes_blocked},
      {"protocol",
       {{"block_threshold", protocol.block_threshold},
        {"rehab_threshold", protocol.rehab_threshold},
        {"attitude_eps", protocol.attitude_eps}}},
  };
}

ScenarioConfig parse_config(const json& j, ScenarioConfig c) {
  Reader r(j, "");
  if (const json* area = r.get("area")) {
    Reader a(*area, "area");
    a.number("x", c.area_x);
    a.number("y", c.area_y);
    a.finish();
  }
  r.integer("n_uavs", c.n_uavs);
  r.number("speed", c.speed);
  r.number("altitude_m", c.altitude_m);
  r.number("range_m", c.range_m);
  r.number("lambda_s", c.lambda_s);
  r.number("lambda_min", c.lambda_min);
  r.number("lambda_max", c.lambda_max);
  r.number("sim_time_s", c.sim_time_s);
  r.integer("runs", c.runs);
  r.unsigned64("seed", c.seed);
  r.number("loss_prob", c.loss_prob);
  if (const json* lat = r.get("latency")) {
    Reader l(*lat, "latency");
    l.number("min_s", c.latency_min_s);
    l.number("max_s", c.latency_max_s);
    l.finish();
  }
  if (const json* adv = r.get("adversary")) {
    Reader a(*adv, "adversary");
    if (const json* ids = a.get("malicious_ids")) {
      require(ids->is_array(), "adversary.malicious_ids", "expected an array");
      c.adversary.malicious_ids.clear();
      for (std::size_t i = 0; i < ids->size(); ++i) {
        const json& v = (*ids)[i];
        const std::string p = "adversary.malicious_ids[" + std::to_string(i) + "]";
        require(v.is_number_integer(), p, "expected an integer id");
        const auto x = v.get<std::int64_t>();
        require(x >= 0 && x <= std::numeric_limits<std::uint32_t>::max(), p, "id out of range");
        c.adversary.malicious_ids.push_back(UavId{static_cast<std::uint32_t>(x)});
      }
    }
    if (auto s = a.string("strategy")) {
      auto parsed = parse_strategy(*s);
      require(parsed.has_value(), "adversary.strategy",
              "unknown strategy '" + *s + "' (offset, uniform_in_area, teleport_far)");
      c.adversary.strategy = *parsed;
    }
    if (const json* off = a.get("offset")) {
      Reader o(*off, "adversary.offset");
      o.number("dx", c.adversary.offset_dx);
      o.number("dy", c.adversary.offset_dy);
      o.finish();
    }
    a.number("active_from", c.adversary.active_from);
    if (const json* until = a.get("active_until")) {
      if (until->is_null()) {
        c.adversary.active_until = std::numeric_limits<double>::infinity();
      } else {
        require(until->is_number(), "adversary.active_until", "expected a number or null");
        c.adversary.active_until = until->get<double>();
      }
    }
    a.finish();
  }
  if (const json* det = r.get("detector")) {
    Reader d(*det, "detector");
    if (auto m = d.string("mode")) {
      auto parsed = parse_detector_mode(*m);
      require(parsed.has_value(), "detector.mode", "unknown mode '" + *m + "' (oracle, kinematic)");
      c.detector.mode = *parsed;
    }
    d.number("vmax", c.detector.vmax);
    d.number("slack", c.detector.slack);
    d.finish();
  }
  r.boolean("gt_excludes_blocked", c.gt_excludes_blocked);
  if (const json* proto = r.get("protocol")) {
    Reader p(*proto, "protocol");
    p.integer("block_threshold", c.protocol.block_threshold);
    p.integer("rehab_threshold", c.protocol.rehab_threshold);
    p.number("attitude_eps", c.protocol.attitude_eps);
    p.finish();
  }
  r.finish();
  validate(c);
  return c;
}

void validate(const ScenarioConfig& c) {
  require(c.area_x > 0.0, "area.x", "must be positive");
  require(c.area_y > 0.0, "area.y", "must be positive");
  require(c.n_uavs > 0, "n_uavs", "must be positive");
  require(c.speed > 0.0, "speed", "must be positive");
  require(c.altitude_m > 0.0, "altitude_m", "must be positive");
  require(c.range_m > 0.0, "range_m", "must be positive");
  require(c.lambda_min > 0.0, "lambda_min", "must be positive");
  require(c.lambda_s > 0.0, "lambda_s", "must be positive");
  require(c.lambda_max > 0.0, "lambda_max", "must be positive");
  require(c.lambda_s >= c.lambda_min && c.lambda_s <= c.lambda_max, "lambda_s",
          "must lie in [lambda_min, lambda_max]");
  require(c.sim_time_s > 0.0, "sim_time_s", "must be positive");
  require(c.runs >= 1, "runs", "must be at least 1");
  require(c.loss_prob >= 0.0 && c.loss_prob <= 1.0, "loss_prob", "must lie in [0, 1]");
  require(c.latency_min_s >= 0.0, "latency.min_s", "must be non-negative");
  require(c.latency_max_s >= c.latency_min_s, "latency.max_s", "must be >= latency.min_s");
  require(c.latency_max_s < c.lambda_s, "latency.max_s", "must be below lambda_s");

  std::set<std::uint32_t> seen;
  for (std::size_t i = 0; i < c.adversary.malicious_ids.size(); ++i) {
    const auto id = c.adversary.malicious_ids[i].value;
    const std::string p = "adversary.malicious_ids[" + std::to_string(i) + "]";
    require(id < static_cast<std::uint32_t>(c.n_uavs), p, "must lie in [0, n_uavs)");
    require(seen.insert(id).second, p, "duplicate id");
  }
  if (c.adversary.strategy == FalsifyStrategy::Offset) {
    require(c.adversary.offset_dx != 0.0 || c.adversary.offset_dy != 0.0, "adversary.offset",
            "offset strategy needs a non-zero offset");
  }
  require(c.adversary.active_from >= 0.0, "adversary.active_from", "must be non-negative");
  require(c.adversary.active_until >= c.adversary.active_from, "adversary.active_until",
          "must be >= active_from");
  require(c.detector.vmax > 0.0, "detector.vmax", "must be positive");
  require(c.detector.slack >= 0.0, "detector.slack", "must be non-negative");
  require(c.protocol.block_threshold >= 1, "protocol.block_threshold", "must be at least 1");
  require(c.protocol.rehab_threshold >= 0 && c.protocol.rehab_threshold < c.protocol.block_threshold,
          "protocol.rehab_threshold", "must lie in [0, block_threshold)");
  require(c.protocol.attitude_eps >= 0.0, "protocol.attitude_eps", "must be non-negative");
}

ScenarioConfig load_config(const fs::path& path, ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return parse_config(j, std::move(base));
}

ScenarioConfig preset(std::string_view name) {
  ScenarioConfig c;
  if (name == "baseline") return c;
  if (name == "baseattk") {
    c.adversary.malicious_ids = {UavId{0}};
    c.adversary.strategy = FalsifyStrategy::TeleportFar;
    c.detector.mode = DetectorMode::Oracle;
    return c;
  }
  throw ConfigError("preset", "unknown preset '" + std::string(name) + "' (baseline, baseattk)");
}

std::string config_hash(const ScenarioConfig& cfg) { return git_blob_sha1(cfg.to_json().dump()); }

// ---- runs ----

RunResult run_single(const ScenarioConfig& cfg, std::size_t index) {
  RunResult r;
  r.index = index;
  r.seed = cfg.seed + index;
  Simulation sim(cfg.kernel(r.seed), static_cast<std::size_t>(cfg.n_uavs));
  const SimTrace& trace = sim.run(cfg.sim_time_s);
  r.nodes = compute_node_metrics(trace, cfg.metrics_options());
  r.trace_hash = trace_digest(trace);

  std::set<UavId> flagged;
  for (const auto& v : trace.verdicts) {
    if (v.flagged) flagged.insert(v.sender);
  }
  if (!flagged.empty()) {
    const GroundTruthView gt(trace, cfg.metrics_options());
    for (UavId id : flagged) r.flagged.emplace_back(id, gamma_confusion(trace, gt, id));
  }
  return r;
}

MetricStats describe(const std::vector<double>& samples) {
  std::vector<double> xs;
  for (double x : samples) {
    if (!std::isnan(x)) xs.push_back(x);
  }
  MetricStats s;
  s.n = xs.size();
  if (xs.empty()) {
    s.mean = s.min = s.max = s.stddev = s.ci95 = kNaN;
    return s;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  if (s.n < 2) {
    s.stddev = 0.0;
    s.ci95 = kNaN;
    return s;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  const boost::math::students_t dist(static_cast<double>(s.n - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  s.ci95 = t * s.stddev / std::sqrt(static_cast<double>(s.n));
  return s;
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols = {
      "psi_s",          "aoii_mean_s",      "aoii_max_s",      "aoi_mean_s",      "omega_mean_m",
      "gamma_mean",     "phi",              "upsilon_mean_ms", "msgs_hm_sent",    "msgs_hm_received",
      "msgs_im_sent",   "msgs_im_received", "msgs_tm_sent",    "msgs_tm_received", "msgs_sn_sent",
      "msgs_sn_received"};
  return cols;
}

std::vector<double> metric_values(const NodeMetrics& m) {
  std::vector<double> v = {m.psi_s,        m.aoii_mean_s, m.aoii_max_s,
                           m.aoi_mean_s,   m.omega_mean_m, m.gamma_mean,
                           static_cast<double>(m.phi), m.upsilon_mean_ms};
  for (std::size_t k = 0; k < kMessageKindCount; ++k) {
    v.push_back(static_cast<double>(m.counters.sent[k]));
    v.push_back(static_cast<double>(m.counters.received[k]));
  }
  return v;
}

std::string metrics_csv(const std::vector<NodeMetrics>& nodes) {
  std::ostringstream out;
  out << "node_id";
  for (const auto& c : metric_columns()) out << ',' << c;
  out << '\n';
  for (const auto& m : nodes) {
    out << m.id.value;
    for (double v : metric_values(m)) out << ',' << fmt(v);
    out << '\n';
  }
  return out.str();
}

std::string confusion_csv(const ConfusionMatrix& m) {
  std::ostringstream out;
  out << "true_count,slots";
  for (std::size_t j = 0; j < m.freq.size(); ++j) out << ",perceived_" << j;
  out << '\n';
  for (std::size_t i = 0; i < m.freq.size(); ++i) {
    std::uint64_t row = 0;
    for (auto c : m.counts[i]) row += c;
    out << i << ',' << row;
    for (double f : m.freq[i]) out << ',' << fmt(f);
    out << '\n';
  }
  return out.str();
}

std::map<std::string, MetricStats> summarize(const std::vector<RunResult>& runs) {
  const auto& cols = metric_columns();
  std::vector<std::vector<double>> samples(cols.size());
  for (const auto& r : runs) {
    for (const auto& m : r.nodes) {
      const auto v = metric_values(m);
      for (std::size_t k = 0; k < cols.size(); ++k) samples[k].push_back(v[k]);
    }
  }
  std::map<std::string, MetricStats> out;
  for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] = describe(samples[k]);
  return out;
}

unsigned campaign_threads(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FLYSAFE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, jobs)));
}

CampaignReport run_campaign(const ScenarioConfig& cfg, const fs::path& out_dir) {
  validate(cfg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  const auto n_runs = static_cast<std::size_t>(cfg.runs);
  std::vector<RunResult> results(n_runs);
  std::vector<std::exception_ptr> errors(n_runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_runs; i = next++) {
      try {
        results[i] = run_single(cfg, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n_threads = campaign_threads(n_runs);
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < n_runs; ++i) {
    if (!errors[i]) continue;
    std::string what = "unknown error";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw std::runtime_error("run " + std::to_string(i) + " (seed " + std::to_string(cfg.seed + i) +
                             ") failed: " + what);
  }

  CampaignReport report;
  const std::string hash = config_hash(cfg);
  json manifest_runs = json::array();
  for (const auto& r : results) {
    const fs::path csv = out_dir / ("metrics_run" + std::to_string(r.index) + ".csv");
    write_file(csv, metrics_csv(r.nodes));
    report.files.push_back(csv);
    for (const auto& [id, m] : r.flagged) {
      const fs::path p = out_dir / ("confusion_run" + std::to_string(r.index) + "_node" +
                                    std::to_string(id.value) + ".csv");
      write_file(p, confusion_csv(m));
      report.files.push_back(p);
    }
    manifest_runs.push_back({{"run", r.index}, {"seed", r.seed}, {"trace_hash", r.trace_hash}});
  }

  report.summary = summarize(results);
  json metrics = json::object();
  for (const auto& [key, s] : report.summary) {
    metrics[key] = {{"n", s.n},
                    {"mean", number_or_null(s.mean)},
                    {"min", number_or_null(s.min)},
                    {"max", number_or_null(s.max)},
                    {"stddev", number_or_null(s.stddev)},
                    {"ci95", number_or_null(s.ci95)}};
  }
  const json summary = {{"config_hash", hash},
                        {"runs", cfg.runs},
                        {"seed", cfg.seed},
                        {"n_uavs", cfg.n_uavs},
                        {"metrics", metrics}};
  const fs::path summary_path = out_dir / "summary.json";
  write_file(summary_path, summary.dump(2) + "\n");
  report.files.push_back(summary_path);

  const json manifest = {{"config_hash", hash}, {"config", cfg.to_json()}, {"runs", manifest_runs}};
  const fs::path manifest_path = out_dir / "manifest.json";
  write_file(manifest_path, manifest.dump(2) + "\n");
  report.files.push_back(manifest_path);

  report.runs = std::move(results);
  return report;
}

// ---- compare ----

json load_summary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open summary " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("metrics") || !j["metrics"].is_object()) {
    throw std::runtime_error(path.string() + ": missing 'metrics' object");
  }
  return j;
}

std::vector<MetricDelta> compare(const json& a, const json& b) {
  const json& ma = a.at("metrics");
  const json& mb = b.at("metrics");
  std::vector<std::string> only_a, only_b;
  for (auto it = ma.begin(); it != ma.end(); ++it) {
    if (!mb.contains(it.key())) only_a.push_back(it.key());
  }
  for (auto it = mb.begin(); it != mb.end(); ++it) {
    if (!ma.contains(it.key())) only_b.push_back(it.key());
  }
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg = "metric keys differ;";
    auto list = [&msg](const char* label, const std::vector<std::string>& keys) {
      if (keys.empty()) return;
      msg += std::string(" missing in ") + label + ":";
      for (const auto& k : keys) msg += " " + k;
      msg += ";";
    };
    list("b", only_a);
    list("a", only_b);
    msg.pop_back();
    throw std::invalid_argument(msg);
  }

  std::vector<MetricDelta> out;
  for (auto it = ma.begin(); it != ma.end(); ++it) {
    for (const char* stat : {"mean", "min"}) {
      MetricDelta d;
      d.key = it.key();
      d.stat = stat;
      d.a = it.value().contains(stat) ? json_number(it.value()[stat]) : kNaN;
      d.b = mb[it.key()].contains(stat) ? json_number(mb[it.key()][stat]) : kNaN;
      d.abs_delta = d.b - d.a;
      if (d.a == d.b) {
        d.abs_delta = 0.0;
        d.rel_delta = 0.0;
      } else if (d.a == 0.0) {
        d.rel_delta = kNaN;
      } else {
        d.rel_delta = d.abs_delta / std::abs(d.a);
      }
      out.push_back(d);
    }
  }
  return out;
}

std::string format_deltas(const std::vector<MetricDelta>& deltas) {
  std::ostringstream out;
  out << std::left << std::setw(18) << "metric" << std::setw(6) << "stat" << std::right << std::setw(16)
      << "a" << std::setw(16) << "b" << std::setw(16) << "b-a" << std::setw(11) << "rel %" << '\n';
  for (const auto& d : deltas) {
    out << std::left << std::setw(18) << d.key << std::setw(6) << d.stat << std::right
        << std::setprecision(6) << std::setw(16) << d.a << std::setw(16) << d.b << std::setw(16)
        << d.abs_delta << std::setw(11) << std::fixed << std::setprecision(2) << 100.0 * d.rel_delta
        << std::defaultfloat << '\n';
  }
  return out.str();
}

json deltas_json(const std::vector<MetricDelta>& deltas) {
  json out = json::object();
  for (const auto& d : deltas) {
    out[d.key][d.stat] = {{"a", number_or_null(d.a)},
                          {"b", number_or_null(d.b)},
                          {"abs_delta", number_or_null(d.abs_delta)},
                          {"rel_delta", number_or_null(d.rel_delta)}};
  }
  return out;
}

}  // namespace flysafe
