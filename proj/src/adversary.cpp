#include "flysafe/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flysafe {

std::string_view to_string(FalsifyStrategy s) {
  switch (s) {
    case FalsifyStrategy::Offset:
      return "offset";
    case FalsifyStrategy::UniformInArea:
      return "uniform_in_area";
    case FalsifyStrategy::TeleportFar:
      return "teleport_far";
  }
  return "?";
}

std::optional<FalsifyStrategy> parse_strategy(std::string_view name) {
  if (name == "offset") return FalsifyStrategy::Offset;
  if (name == "uniform_in_area") return FalsifyStrategy::UniformInArea;
  if (name == "teleport_far") return FalsifyStrategy::TeleportFar;
  return std::nullopt;
}

std::string_view to_string(DetectorMode m) {
  return m == DetectorMode::Oracle ? "oracle" : "kinematic";
}

std::optional<DetectorMode> parse_detector_mode(std::string_view name) {
  if (name == "oracle") return DetectorMode::Oracle;
  if (name == "kinematic") return DetectorMode::Kinematic;
  return std::nullopt;
}

bool AdversaryConfig::is_malicious(UavId id) const {
  return std::find(malicious_ids.begin(), malicious_ids.end(), id) != malicious_ids.end();
}

void DetectorConfig::validate() const {
  if (!(vmax > 0.0)) throw std::invalid_argument("detector vmax must be positive");
  if (!(slack >= 0.0)) throw std::invalid_argument("detector slack must be non-negative");
}

namespace {

Location3D uniform_point(const AreaBounds& b, double z, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(b.x_min, b.x_max);
  std::uniform_real_distribution<double> uy(b.y_min, b.y_max);
  const double x = ux(rng);
  const double y = uy(rng);
  return {x, y, z};
}

double horizontal_distance(const Location3D& a, const Location3D& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

Location3D teleport_far(const Location3D& true_loc, const FalsifyParams& p, std::mt19937_64& rng) {
  const double min_sep = 2.0 * p.range_m;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Location3D cand = uniform_point(p.bounds, true_loc.z, rng);
    if (horizontal_distance(cand, true_loc) > min_sep) return cand;
  }
  // Area too small to hold a far point; leave it.
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double a = angle(rng);
  const double r = 1.5 * min_sep;
  return {true_loc.x + r * std::cos(a), true_loc.y + r * std::sin(a), true_loc.z};
}

}  // namespace

Location3D falsify(const Location3D& true_loc, FalsifyStrategy strategy, const FalsifyParams& params,
                   std::mt19937_64& rng) {
  switch (strategy) {
    case FalsifyStrategy::Offset: {
      if (params.dx == 0.0 && params.dy == 0.0) {
        throw std::invalid_argument("offset strategy needs a non-zero offset");
      }
      return {true_loc.x + params.dx, true_loc.y + params.dy, true_loc.z};
    }
    case FalsifyStrategy::UniformInArea: {
      Location3D cand = uniform_point(params.bounds, true_loc.z, rng);
      while (cand == true_loc) cand = uniform_point(params.bounds, true_loc.z, rng);
      return cand;
    }
    case FalsifyStrategy::TeleportFar:
      return teleport_far(true_loc, params, rng);
  }
  throw std::logic_error("unknown falsify strategy");
}

Falsifier::Falsifier(FalsifyStrategy strategy, FalsifyParams params, double memory_s)
    : strategy_(strategy), params_(params), memory_s_(memory_s) {}

Location3D Falsifier::claim(const Location3D& true_loc, double now, std::mt19937_64& rng) {
  if (!recent_.empty() && recent_.back().time == now) return recent_.back().loc;
  while (!recent_.empty() && now - recent_.front().time > memory_s_) recent_.pop_front();

  Location3D fake;
  if (strategy_ != FalsifyStrategy::TeleportFar) {
    fake = falsify(true_loc, strategy_, params_, rng);
  } else {
    // Keep the best candidate in case the exclusion zones crowd the area.
    double best_margin = -std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 256; ++attempt) {
      const Location3D cand = falsify(true_loc, strategy_, params_, rng);
      double margin = std::numeric_limits<double>::infinity();
      for (const auto& prev : recent_) {
        margin = std::min(margin, horizontal_distance(cand, prev.loc) - params_.range_m);
      }
      if (margin > best_margin) {
        best_margin = margin;
        fake = cand;
      }
      if (margin > 0.0) break;
    }
  }
  recent_.push_back({fake, now});
  return fake;
}

Verdict verdict(const std::optional<ClaimSample>& prior, const Location3D& claimed, double now,
                const DetectorConfig& cfg, const std::optional<Location3D>& oracle_truth) {
  if (cfg.mode == DetectorMode::Oracle) {
    if (!oracle_truth) throw std::invalid_argument("oracle detector needs the true location");
    return claimed == *oracle_truth ? Verdict::Honest : Verdict::False;
  }
  if (!prior) return Verdict::Honest;
  if (now <= prior->time) {
    throw std::domain_error("kinematic verdict needs now > t_prior");
  }
  const double speed = distance(prior->loc, claimed) / (now - prior->time);
  return speed > cfg.vmax * (1.0 + cfg.slack) ? Verdict::False : Verdict::Honest;
}

Verdict assess_claim(const std::optional<ClaimSample>& prior, const Location3D& claimed,
                     double sent_at, const DetectorConfig& cfg,
                     const std::optional<Location3D>& oracle_truth) {
  if (cfg.mode == DetectorMode::Oracle || !prior || sent_at > prior->time) {
    return verdict(prior, claimed, sent_at, cfg, oracle_truth);
  }
  if (sent_at == prior->time) {
    return claimed == prior->loc ? Verdict::Honest : Verdict::False;
  }
  return verdict(ClaimSample{claimed, sent_at}, prior->loc, prior->time, cfg, oracle_truth);
}

}  // namespace flysafe
