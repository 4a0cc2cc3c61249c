#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "flysafe/adversary.hpp"
#include "flysafe/core_model.hpp"

namespace flysafe {

struct ProtocolConfig {
  int block_threshold = 3;  // r at which a suspect is blocked
  int rehab_threshold = 0;  // r at which a suspect is honest again
  double attitude_eps = 0.5;

  void validate() const;
};

/// Wall-clock time plus the slot it falls in.
struct Instant {
  double time = 0.0;
  std::int64_t slot = 0;
};

/// A message a node wants on the air. No destination means broadcast.
struct Outbound {
  Message msg;
  std::optional<UavId> dest;
};

struct MessageCounters {
  std::array<std::uint64_t, kMessageKindCount> sent{};
  std::array<std::uint64_t, kMessageKindCount> received{};

  std::uint64_t sent_of(MessageKind k) const { return sent[static_cast<std::size_t>(k)]; }
  std::uint64_t received_of(MessageKind k) const { return received[static_cast<std::size_t>(k)]; }
};

enum class GuardAction : std::uint8_t { Process, Drop };

struct GuardResult {
  GuardAction action = GuardAction::Process;
  std::vector<Outbound> notifications;
};

struct ReceiveResult {
  bool processed = false;
  std::vector<Outbound> out;
};

/// One UAV's location-sharing state machine: neighbor discovery, mobility
/// driven maintenance and false-location management. Handlers return the
/// messages the node wants sent; the caller owns the radio.
class Node {
 public:
  Node(UavId id, Location3D loc, ProtocolConfig cfg = {});

  UavId id() const { return id_; }
  const Location3D& loc() const { return loc_; }
  const Location3D& prev_loc() const { return prev_loc_; }
  const NeighborList& nl() const { return nl_; }
  const std::map<UavId, SuspectEntry>& suspects() const { return sl_; }
  const MessageCounters& counters() const { return counters_; }
  const ProtocolConfig& config() const { return cfg_; }

  bool is_blocked(UavId id) const;
  bool is_suspect(UavId id) const;
  /// True while the discovery trigger holds: empty NL or only h > 1 entries.
  bool announce_pending() const { return nl_.empty() || nl_.only_beyond_one_hop(); }

  std::optional<ClaimSample> claim_history(UavId sender) const;

  /// GPS refresh without treating it as a location change.
  void observe_position(const Location3D& gps) { loc_ = gps; }

  /// Clears all protocol state and announces with an HM.
  std::vector<Outbound> on_start(Instant now);

  /// Upserts the announcer, merges its NL and answers with one IM.
  std::vector<Outbound> on_hello(const Message& hm, Instant now);
  void on_identification(const Message& im, Instant now);
  void on_trap(const Message& tm, Instant now);
  void merge_neighbor_nl(std::span<const NeighborSnapshot> payload, Instant now);

  /// q decay, eviction at q = 0, and discovery when the NL is empty or holds
  /// only two-hop entries. At most one HM per slot.
  std::vector<Outbound> on_slot_tick(Instant now);

  /// TMs to every one-hop neighbor, or discovery if there are none.
  /// Callers only invoke this when the location actually changed.
  std::vector<Outbound> on_location_change(const Location3D& new_loc, Instant now);

  /// Blocking/suspicion bookkeeping on a located message given its verdict.
  GuardResult guard_message(const Message& msg, Verdict v, Instant now);

  void on_state_notification(const Message& sn);

  /// Full receive path: counters, guard, dispatch, claim history.
  ReceiveResult receive(const Message& msg, Verdict v, Instant now);

 private:
  void upsert_direct(const Message& m, Instant now, bool from_trap);
  NodeMark mark_for(UavId id) const;
  void set_mark(UavId id, NodeMark mark);
  void forget(UavId id);
  std::vector<NeighborSnapshot> payload() const;
  Outbound located(MessageKind kind, std::optional<UavId> dest, Instant now);
  std::vector<Outbound> maybe_hello(Instant now);
  std::vector<Outbound> notify(SuspicionState state, UavId target, Instant now);
  void count_sent(const std::vector<Outbound>& out);

  UavId id_;
  Location3D loc_;
  Location3D prev_loc_;
  ProtocolConfig cfg_;
  NeighborList nl_;
  std::map<UavId, SuspectEntry> sl_;
  std::map<UavId, ClaimSample> claims_;
  MessageCounters counters_;
  std::optional<std::int64_t> last_hello_slot_;
};

}  // namespace flysafe
