#pragma once

#include <cstdint>
#include <vector>

#include "flysafe/core_model.hpp"
#include "flysafe/simkernel.hpp"

namespace flysafe {

struct MetricsOptions {
  /// Drop from node j's truth the ids j has blocked.
  bool gt_excludes_blocked = false;
};

/// Omniscient in-range sets per slot, built from snapshot positions.
class GroundTruthView {
 public:
  explicit GroundTruthView(const SimTrace& trace, MetricsOptions opts = {});

  /// Sorted ids truly within range of `node` at the end of `slot`.
  const std::vector<UavId>& at(std::int64_t slot, UavId node) const;
  std::int64_t slot_count() const { return static_cast<std::int64_t>(truth_.size()); }

 private:
  std::vector<std::vector<std::vector<UavId>>> truth_;  // [slot][node]
};

/// Sorted ids of h = 1, unblocked entries in a snapshot.
std::vector<UavId> perceived_one_hop(const NodeSnapshot& snap);

/// W_j - |GT_j| for one slot.
int gamma(const SimTrace& trace, const GroundTruthView& gt, UavId node, std::int64_t slot);
std::vector<int> gamma_series(const SimTrace& trace, const GroundTruthView& gt, UavId node);

/// Awareness in a slot: the perceived one-hop set equals the truth exactly.
bool aware(const SimTrace& trace, const GroundTruthView& gt, UavId node, std::int64_t slot);
std::vector<bool> awareness_series(const SimTrace& trace, const GroundTruthView& gt, UavId node);

/// Time spent aware.
double psi(const SimTrace& trace, const GroundTruthView& gt, UavId node);

struct AoiiResult {
  double total_s = 0.0;
  std::vector<double> intervals_s;  // maximal unaware runs, in order
  double mean_s = 0.0;              // 0 with no intervals
  double max_s = 0.0;
};
AoiiResult aoii(const SimTrace& trace, const GroundTruthView& gt, UavId node);

/// Time-average age of the freshest accepted HM/IM/TM over [0, duration].
/// Age grows from 0 at t = 0 until the first update.
double aoi(const SimTrace& trace, UavId node);

/// |d^r - d^m| per accepted HM/IM/TM at `node`, in acceptance order.
std::vector<double> omega_samples(const SimTrace& trace, UavId node);

struct UpsilonResult {
  std::vector<double> samples_s;  // per matched TM, keyed to the receiving node
  std::size_t unmatched = 0;
};
/// Recognition delay at `node`: for every TM addressed to it while it was in
/// range (delivered or lost in flight), the time from the sender's change
/// detection to the first accepted update from that sender sent at or after
/// it, searched within three slots.
UpsilonResult upsilon(const SimTrace& trace, UavId node);

/// HM + IM + TM sent by `node` during slots it was unaware.
std::uint64_t phi(const SimTrace& trace, const GroundTruthView& gt, UavId node);

struct ConfusionMatrix {
  std::vector<std::vector<std::uint64_t>> counts;  // [true count][perceived count]
  std::vector<std::vector<double>> freq;           // row-normalized counts
  std::uint64_t total = 0;
  double accuracy = 0.0;  // share of slots on the diagonal
  double fp_rate = 0.0;   // perceived > true
  double fn_rate = 0.0;   // perceived < true

  /// Share of the diagonal hits with a true count <= k.
  double diagonal_share_up_to(std::size_t k) const;
};
ConfusionMatrix gamma_confusion(const SimTrace& trace, const GroundTruthView& gt, UavId node);

/// Running sum of |Γ|.
std::vector<std::int64_t> accumulated_gamma(const std::vector<int>& gamma);

struct NodeMetrics {
  UavId id{};
  double psi_s = 0.0;
  double aoii_total_s = 0.0;
  double aoii_mean_s = 0.0;
  double aoii_max_s = 0.0;
  double aoi_mean_s = 0.0;
  double omega_mean_m = 0.0;  // NaN without samples
  double gamma_mean = 0.0;    // mean |Γ| over slots
  std::uint64_t phi = 0;
  double upsilon_mean_ms = 0.0;  // NaN without samples
  std::size_t upsilon_unmatched = 0;
  MessageCounters counters;
};

std::vector<NodeMetrics> compute_node_metrics(const SimTrace& trace, MetricsOptions opts = {});

}  // namespace flysafe
