#pragma once

#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "flysafe/core_model.hpp"
#include "flysafe/mobility.hpp"

namespace flysafe {

enum class Verdict : std::uint8_t { Honest, False };

enum class FalsifyStrategy : std::uint8_t { Offset, UniformInArea, TeleportFar };

std::string_view to_string(FalsifyStrategy s);
std::optional<FalsifyStrategy> parse_strategy(std::string_view name);

struct AdversaryConfig {
  std::vector<UavId> malicious_ids;
  FalsifyStrategy strategy = FalsifyStrategy::TeleportFar;
  double offset_dx = 100.0;
  double offset_dy = 0.0;
  double active_from = 0.0;
  double active_until = std::numeric_limits<double>::infinity();

  bool is_malicious(UavId id) const;
  bool active_at(double t) const { return t >= active_from && t <= active_until; }
};

enum class DetectorMode : std::uint8_t { Oracle, Kinematic };

std::string_view to_string(DetectorMode m);
std::optional<DetectorMode> parse_detector_mode(std::string_view name);

struct DetectorConfig {
  DetectorMode mode = DetectorMode::Oracle;
  double vmax = 20.0;   // m/s
  double slack = 0.15;  // fraction of vmax tolerated on top

  void validate() const;
};

/// A location claim as the receiver last accepted it.
struct ClaimSample {
  Location3D loc;
  double time = 0.0;
};

struct FalsifyParams {
  double dx = 100.0;
  double dy = 0.0;
  AreaBounds bounds;
  double range_m = 115.0;
};

/// Stateless false location per strategy; never equal to `true_loc`.
/// teleport_far lands strictly farther than 2R from the true position.
Location3D falsify(const Location3D& true_loc, FalsifyStrategy strategy, const FalsifyParams& params,
                   std::mt19937_64& rng);

/// Per-MalUAV lie generator. One fake per send instant; under teleport_far each
/// new fake also keeps more than R away from every fake issued during the last
/// `memory_s` seconds, so consecutive claims never look like plausible flight.
class Falsifier {
 public:
  Falsifier(FalsifyStrategy strategy, FalsifyParams params, double memory_s);

  Location3D claim(const Location3D& true_loc, double now, std::mt19937_64& rng);

 private:
  FalsifyStrategy strategy_;
  FalsifyParams params_;
  double memory_s_;
  std::deque<ClaimSample> recent_;
};

/// Receiver-side test on a location claim.
///  - oracle: false iff the claim differs from `oracle_truth` (required in this mode).
///  - kinematic: false iff a prior exists and the implied speed exceeds vmax·(1+slack).
/// Throws std::domain_error when now <= prior->time in kinematic mode.
Verdict verdict(const std::optional<ClaimSample>& prior, const Location3D& claimed, double now,
                const DetectorConfig& cfg, const std::optional<Location3D>& oracle_truth);

/// verdict() for claims that may arrive out of send order: the two samples are
/// ordered by time first; equal timestamps with different claims are false.
Verdict assess_claim(const std::optional<ClaimSample>& prior, const Location3D& claimed,
                     double sent_at, const DetectorConfig& cfg,
                     const std::optional<Location3D>& oracle_truth);

}  // namespace flysafe
