#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "flysafe/adversary.hpp"
#include "flysafe/core_model.hpp"
#include "flysafe/mobility.hpp"
#include "flysafe/protocol.hpp"

namespace flysafe {

struct RadioConfig {
  double range_m = 115.0;
  double loss_prob = 0.0;
  double latency_min_s = 5e-5;
  double latency_max_s = 5e-3;

  void validate() const;
};

enum class EventKind : std::uint8_t { NodeStart, NodeStop, MoveStep, SlotTick, Deliver, Snapshot };

/// What travels over the air. true_loc is the sender's real position at send
/// time, which only the kernel and the oracle detector get to see.
struct Envelope {
  Message msg;
  std::optional<Location3D> true_loc;
};

struct SimEvent {
  double time = 0.0;
  std::uint64_t seq = 0;  // assigned by the queue
  EventKind kind = EventKind::SlotTick;
  UavId node{};  // target node; unused for MoveStep and Snapshot
  std::int64_t slot = 0;
  std::shared_ptr<const Envelope> envelope;  // Deliver only
};

inline SimEvent make_event(double time, EventKind kind, UavId node = {}, std::int64_t slot = 0) {
  SimEvent e;
  e.time = time;
  e.kind = kind;
  e.node = node;
  e.slot = slot;
  return e;
}

/// Min-heap on (time, seq). seq is handed out in insertion order so equal
/// times dispatch first-in first-out.
class EventQueue {
 public:
  std::uint64_t push(SimEvent e);
  SimEvent pop();
  const SimEvent& top() const { return heap_.top(); }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  double now() const { return now_; }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
};

// ---- trace records ----

struct NlRow {
  UavId id{};
  int hops = 1;
  int q = 0;
  NodeMark state = NodeMark::Honest;
  Location3D loc{};
};

struct NodeSnapshot {
  Location3D pos{};
  bool active = true;
  std::vector<NlRow> nl;       // ascending id
  std::vector<UavId> blocked;  // ascending id
};

struct SendRecord {
  double time = 0.0;
  UavId sender{};
  MessageKind kind = MessageKind::Hello;
  std::optional<UavId> dest;
  std::uint32_t reachable = 0;  // active receivers in range at send time
  std::uint32_t scheduled = 0;  // Deliver events created (reachable minus losses)
  bool falsified = false;
};

/// A located message the receiver processed (not dropped by the guard).
struct AcceptRecord {
  double recv_time = 0.0;
  double sent_at = 0.0;
  UavId receiver{};
  UavId sender{};
  MessageKind kind = MessageKind::Hello;
  Location3D claimed{};
  Location3D receiver_true{};
  Location3D sender_true{};  // sender's real position at recv_time
};

struct VerdictRecord {
  double time = 0.0;
  UavId receiver{};
  UavId sender{};
  bool flagged = false;
  bool had_prior = false;
  bool sender_malicious = false;
};

struct DispatchRecord {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::SlotTick;
  UavId node{};
};

struct SimTrace {
  double lambda_s = 0.0;
  double range_m = 0.0;
  std::int64_t slot_count = 0;
  std::size_t node_count = 0;
  std::vector<UavId> malicious;
  std::vector<std::vector<NodeSnapshot>> snapshots;  // [slot][node id]
  std::vector<SendRecord> sends;
  std::vector<AcceptRecord> accepts;
  std::vector<VerdictRecord> verdicts;
  std::vector<DispatchRecord> dispatch_log;
  std::vector<MessageCounters> counters;  // [node id]

  double duration_s() const { return static_cast<double>(slot_count) * lambda_s; }
};

/// Canonical byte form of a trace; equal traces give equal bytes.
std::string serialize(const SimTrace& trace);
/// git-style blob hash of serialize(trace).
std::string trace_digest(const SimTrace& trace);

// ---- simulation ----

struct KernelConfig {
  SlotConfig slot;
  RadioConfig radio;
  AreaBounds area;
  double altitude_m = 91.44;
  double speed = 20.0;
  ProtocolConfig protocol;
  AdversaryConfig adversary;
  DetectorConfig detector;
  std::uint64_t seed = 1;
  double tick_phase = 0.5;  // fraction of a slot at which SlotTicks fire

  void validate() const;
};

/// Explicit node placement. A non-empty script pins the node to waypoints:
/// script[k] is its position at the start of slot k, interpolated linearly
/// inside the slot and held after the last entry.
struct NodeSpec {
  Location3D start{};
  std::vector<Location3D> script;
};

class Simulation {
 public:
  /// n nodes placed uniformly at random, all on the random walk.
  Simulation(KernelConfig cfg, std::size_t n_nodes);
  Simulation(KernelConfig cfg, std::vector<NodeSpec> nodes);

  std::size_t size() const { return flyers_.size(); }
  double now() const { return queue_.now(); }
  const KernelConfig& config() const { return cfg_; }

  Node& node(UavId id);
  const Node& node(UavId id) const;
  bool active(UavId id) const;
  Location3D true_position(UavId id, double t) const;

  /// Throws std::invalid_argument for past-dated events.
  std::uint64_t schedule(SimEvent e);

  /// Raw radio. Returns the number of Deliver events scheduled.
  std::uint32_t broadcast(UavId sender, Message msg);
  std::uint32_t unicast(UavId sender, UavId dest, Message msg);

  /// Schedules the slot timeline on first call and dispatches every event
  /// with time <= until.
  const SimTrace& run(double until);
  const SimTrace& trace() const { return trace_; }

 private:
  struct Flyer {
    explicit Flyer(Node n) : node(std::move(n)) {}

    Node node;
    bool active = false;
    bool scripted = false;
    std::vector<Location3D> script;
    MobilityState mob;        // pos is the target at the end of the current slot
    Location3D slot_start{};  // position at the start of mob_slot
    std::int64_t mob_slot = 0;
    std::optional<Falsifier> falsifier;
  };

  void init_streams();
  void prime_mobility();
  Location3D waypoint(const Flyer& f, std::int64_t slot) const;
  Instant instant() const;
  std::int64_t slot_of(double t) const;

  void dispatch(const SimEvent& e);
  void on_move(std::int64_t slot);
  void on_deliver(const SimEvent& e);
  void on_snapshot(std::int64_t slot);
  void transmit(UavId sender, std::vector<Outbound> out);
  struct Reach {
    std::uint32_t reachable = 0;
    std::uint32_t scheduled = 0;
  };
  Reach radiate(UavId sender, std::optional<UavId> dest, Envelope env);

  Flyer& flyer(UavId id);
  const Flyer& flyer(UavId id) const;

  KernelConfig cfg_;
  std::vector<Flyer> flyers_;
  EventQueue queue_;
  SimTrace trace_;
  bool primed_ = false;

  std::mt19937_64 mobility_rng_;
  std::mt19937_64 loss_rng_;
  std::mt19937_64 latency_rng_;
  std::mt19937_64 adversary_rng_;
};

/// Stream derivation shared by the kernel and tests.
std::mt19937_64 derive_stream(std::uint64_t master_seed, std::uint64_t stream_id);

}  // namespace flysafe
