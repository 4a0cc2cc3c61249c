#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace flysafe {

/// Identity of one UAV, unique and stable for a whole simulation.
struct UavId {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const UavId&) const = default;
};

/// Position in flat Cartesian meters. z is altitude above ground.
struct Location3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr bool operator==(const Location3D&) const = default;
};

bool is_valid(const Location3D& loc);

/// Freshness counter of a neighbor entry. Always within [0, 3].
class QualityFlag {
 public:
  static constexpr int kMax = 3;

  constexpr QualityFlag() = default;
  explicit QualityFlag(int q);

  constexpr int value() const { return q_; }
  constexpr void refresh() { q_ = kMax; }
  /// Decrements with a floor at 0.
  constexpr void decay() {
    if (q_ > 0) --q_;
  }

  constexpr bool operator==(const QualityFlag&) const = default;

 private:
  int q_ = kMax;
};

enum class Attitude : std::uint8_t { Static = 0, Inbound = 1, Outbound = 2 };

/// Receiver-local judgment on a neighbor, the `s` flag.
enum class NodeMark : std::uint8_t { Honest = 0, Malicious = 1 };

/// One row of a neighbor list.
struct NeighborEntry {
  UavId id;
  std::int64_t last_update_slot = 0;
  Location3D loc;
  QualityFlag q;
  int hops = 1;
  Attitude attitude = Attitude::Static;
  double distance_m = 0.0;
  NodeMark state = NodeMark::Honest;
};

/// Neighbor list keyed by id. Never holds its owner's id.
class NeighborList {
 public:
  using Map = std::map<UavId, NeighborEntry>;

  explicit NeighborList(UavId owner) : owner_(owner) {}

  UavId owner() const { return owner_; }

  /// Inserts or replaces the entry for `entry.id`. Throws on the owner's id.
  NeighborEntry& upsert(const NeighborEntry& entry);
  bool erase(UavId id);
  void clear() { entries_.clear(); }

  NeighborEntry* find(UavId id);
  const NeighborEntry* find(UavId id) const;
  bool contains(UavId id) const { return entries_.count(id) != 0; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t one_hop_count() const;
  /// True when at least one entry exists and every entry has h > 1.
  bool only_beyond_one_hop() const;

  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }
  Map::iterator begin() { return entries_.begin(); }
  Map::iterator end() { return entries_.end(); }

  template <typename Pred>
  std::vector<UavId> erase_if(Pred pred) {
    std::vector<UavId> removed;
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (pred(it->second)) {
        removed.push_back(it->first);
        it = entries_.erase(it);
      } else {
        ++it;
      }
    }
    return removed;
  }

 private:
  UavId owner_;
  Map entries_;
};

struct SuspectEntry {
  UavId id;
  int recurrence = 0;
  bool blocked = false;
};

enum class MessageKind : std::uint8_t {
  Hello = 0,
  Identification = 1,
  Trap = 2,
  StateNotification = 3,
};
inline constexpr std::size_t kMessageKindCount = 4;

std::string_view to_string(MessageKind kind);

enum class SuspicionState : std::uint8_t { Suspect, Blocked, Honest };

/// What travels of a neighbor-list row: q/a/d/s stay receiver-local.
struct NeighborSnapshot {
  UavId id;
  Location3D loc;
  int hops = 1;

  bool operator==(const NeighborSnapshot&) const = default;
};

struct Message {
  MessageKind kind = MessageKind::Hello;
  UavId sender;
  /// Absent on state notifications.
  std::optional<Location3D> sender_loc;
  std::vector<NeighborSnapshot> payload_nl;
  std::optional<UavId> sn_target;
  SuspicionState sn_state = SuspicionState::Suspect;
  double sent_at = 0.0;

  bool carries_location() const { return kind != MessageKind::StateNotification; }
};

struct SlotConfig {
  double lambda_s = 1.5;
  double lambda_min = 0.5;
  double lambda_max = 3.0;

  double hello_freq_hz() const { return 1.0 / lambda_s; }
  /// Throws std::invalid_argument unless 0 < lambda_min <= lambda_s <= lambda_max.
  void validate() const;
};

/// Euclidean distance in meters.
double distance(const Location3D& a, const Location3D& b);

/// Inclusive range test: distance(a, b) <= r.
bool in_range(const Location3D& a, const Location3D& b, double r);

Attitude classify_attitude(double prev_d, double new_d, double eps = 0.5);

}  // namespace flysafe

template <>
struct std::hash<flysafe::UavId> {
  std::size_t operator()(const flysafe::UavId& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
