#include "flysafe/protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace flysafe {

void ProtocolConfig::validate() const {
  if (block_threshold < 1) throw std::invalid_argument("block_threshold must be >= 1");
  if (rehab_threshold < 0 || rehab_threshold >= block_threshold) {
    throw std::invalid_argument("rehab_threshold must lie in [0, block_threshold)");
  }
  if (!(attitude_eps >= 0.0)) throw std::invalid_argument("attitude_eps must be >= 0");
}

Node::Node(UavId id, Location3D loc, ProtocolConfig cfg)
    : id_(id), loc_(loc), prev_loc_(loc), cfg_(cfg), nl_(id) {
  cfg_.validate();
}

bool Node::is_blocked(UavId id) const {
  auto it = sl_.find(id);
  return it != sl_.end() && it->second.blocked;
}

bool Node::is_suspect(UavId id) const {
  auto it = sl_.find(id);
  return it != sl_.end() && !it->second.blocked;
}

std::optional<ClaimSample> Node::claim_history(UavId sender) const {
  auto it = claims_.find(sender);
  if (it == claims_.end()) return std::nullopt;
  return it->second;
}

NodeMark Node::mark_for(UavId id) const {
  return is_suspect(id) ? NodeMark::Malicious : NodeMark::Honest;
}

void Node::set_mark(UavId id, NodeMark mark) {
  if (auto* e = nl_.find(id)) e->state = mark;
}

void Node::forget(UavId id) {
  nl_.erase(id);
  claims_.erase(id);
}

std::vector<NeighborSnapshot> Node::payload() const {
  std::vector<NeighborSnapshot> out;
  out.reserve(nl_.size());
  for (const auto& [nid, e] : nl_) out.push_back({nid, e.loc, e.hops});
  return out;
}

Outbound Node::located(MessageKind kind, std::optional<UavId> dest, Instant now) {
  Message m;
  m.kind = kind;
  m.sender = id_;
  m.sender_loc = loc_;
  m.payload_nl = payload();
  m.sent_at = now.time;
  return {std::move(m), dest};
}

void Node::count_sent(const std::vector<Outbound>& out) {
  for (const auto& o : out) ++counters_.sent[static_cast<std::size_t>(o.msg.kind)];
}

std::vector<Outbound> Node::maybe_hello(Instant now) {
  if (last_hello_slot_ && *last_hello_slot_ == now.slot) return {};
  last_hello_slot_ = now.slot;
  std::vector<Outbound> out{located(MessageKind::Hello, std::nullopt, now)};
  count_sent(out);
  return out;
}

std::vector<Outbound> Node::notify(SuspicionState state, UavId target, Instant now) {
  std::vector<Outbound> out;
  for (const auto& [nid, e] : nl_) {
    if (e.hops != 1 || nid == target) continue;
    Message m;
    m.kind = MessageKind::StateNotification;
    m.sender = id_;
    m.sn_target = target;
    m.sn_state = state;
    m.sent_at = now.time;
    out.push_back({std::move(m), nid});
  }
  count_sent(out);
  return out;
}

std::vector<Outbound> Node::on_start(Instant now) {
  nl_.clear();
  sl_.clear();
  claims_.clear();
  last_hello_slot_.reset();
  prev_loc_ = loc_;
  return maybe_hello(now);
}

void Node::upsert_direct(const Message& m, Instant now, bool from_trap) {
  const Location3D sender_loc = m.sender_loc.value();
  const double d = distance(loc_, sender_loc);
  NeighborEntry entry;
  entry.id = m.sender;
  Attitude attitude = Attitude::Static;
  if (const auto* prev = nl_.find(m.sender)) {
    entry = *prev;
    if (from_trap) attitude = classify_attitude(prev->distance_m, d, cfg_.attitude_eps);
  }
  entry.last_update_slot = now.slot;
  entry.loc = sender_loc;
  entry.q.refresh();
  entry.hops = 1;
  entry.attitude = attitude;
  entry.distance_m = d;
  entry.state = mark_for(m.sender);
  nl_.upsert(entry);
}

std::vector<Outbound> Node::on_hello(const Message& hm, Instant now) {
  if (hm.kind != MessageKind::Hello) throw std::invalid_argument("on_hello expects an HM");
  if (hm.sender == id_ || is_blocked(hm.sender)) return {};
  upsert_direct(hm, now, false);
  merge_neighbor_nl(hm.payload_nl, now);
  std::vector<Outbound> out{located(MessageKind::Identification, hm.sender, now)};
  count_sent(out);
  return out;
}

void Node::on_identification(const Message& im, Instant now) {
  if (im.kind != MessageKind::Identification) {
    throw std::invalid_argument("on_identification expects an IM");
  }
  if (im.sender == id_ || is_blocked(im.sender)) return;
  upsert_direct(im, now, false);
  merge_neighbor_nl(im.payload_nl, now);
}

void Node::on_trap(const Message& tm, Instant now) {
  if (tm.kind != MessageKind::Trap) throw std::invalid_argument("on_trap expects a TM");
  if (tm.sender == id_ || is_blocked(tm.sender)) return;
  upsert_direct(tm, now, true);
  merge_neighbor_nl(tm.payload_nl, now);
}

void Node::merge_neighbor_nl(std::span<const NeighborSnapshot> payload, Instant now) {
  for (const auto& p : payload) {
    if (p.id == id_ || is_blocked(p.id)) continue;
    const double d = distance(loc_, p.loc);
    if (auto* e = nl_.find(p.id)) {
      if (e->state == NodeMark::Malicious) continue;
      e->loc = p.loc;
      e->distance_m = d;
      e->last_update_slot = now.slot;
      continue;
    }
    NeighborEntry entry;
    entry.id = p.id;
    entry.last_update_slot = now.slot;
    entry.loc = p.loc;
    entry.hops = 2;
    entry.distance_m = d;
    entry.state = mark_for(p.id);
    nl_.upsert(entry);
  }
}

std::vector<Outbound> Node::on_slot_tick(Instant now) {
  for (auto& [nid, e] : nl_) e.q.decay();
  for (UavId gone : nl_.erase_if([](const NeighborEntry& e) { return e.q.value() == 0; })) {
    claims_.erase(gone);
  }
  if (announce_pending()) return maybe_hello(now);
  return {};
}

std::vector<Outbound> Node::on_location_change(const Location3D& new_loc, Instant now) {
  prev_loc_ = loc_;
  loc_ = new_loc;
  if (nl_.one_hop_count() == 0) return maybe_hello(now);
  std::vector<Outbound> out;
  for (const auto& [nid, e] : nl_) {
    if (e.hops == 1) out.push_back(located(MessageKind::Trap, nid, now));
  }
  count_sent(out);
  return out;
}

GuardResult Node::guard_message(const Message& msg, Verdict v, Instant now) {
  const UavId sender = msg.sender;
  if (is_blocked(sender)) return {GuardAction::Drop, {}};

  auto it = sl_.find(sender);
  if (v == Verdict::False) {
    if (it == sl_.end()) {
      sl_[sender] = SuspectEntry{sender, 1, false};
      set_mark(sender, NodeMark::Malicious);
      return {GuardAction::Process, notify(SuspicionState::Suspect, sender, now)};
    }
    SuspectEntry& s = it->second;
    ++s.recurrence;
    if (s.recurrence >= cfg_.block_threshold) {
      s.blocked = true;
      forget(sender);
      return {GuardAction::Drop, notify(SuspicionState::Blocked, sender, now)};
    }
    return {GuardAction::Drop, {}};
  }

  if (it != sl_.end()) {
    SuspectEntry& s = it->second;
    --s.recurrence;
    if (s.recurrence <= cfg_.rehab_threshold) {
      sl_.erase(it);
      set_mark(sender, NodeMark::Honest);
      return {GuardAction::Process, notify(SuspicionState::Honest, sender, now)};
    }
  }
  return {GuardAction::Process, {}};
}

void Node::on_state_notification(const Message& sn) {
  if (sn.kind != MessageKind::StateNotification || !sn.sn_target) {
    throw std::invalid_argument("on_state_notification expects an SN with a target");
  }
  const UavId target = *sn.sn_target;
  if (target == id_ || is_blocked(sn.sender)) return;

  switch (sn.sn_state) {
    case SuspicionState::Suspect:
      if (sl_.count(target) != 0) return;
      sl_[target] = SuspectEntry{target, 1, false};
      set_mark(target, NodeMark::Malicious);
      return;
    case SuspicionState::Blocked: {
      forget(target);
      auto& s = sl_[target];
      s.id = target;
      s.recurrence = std::max(s.recurrence, cfg_.block_threshold);
      s.blocked = true;
      return;
    }
    case SuspicionState::Honest:
      if (is_suspect(target)) {
        sl_.erase(target);
        set_mark(target, NodeMark::Honest);
      }
      return;
  }
}

ReceiveResult Node::receive(const Message& msg, Verdict v, Instant now) {
  ++counters_.received[static_cast<std::size_t>(msg.kind)];
  if (msg.sender == id_) return {};
  if (msg.kind == MessageKind::StateNotification) {
    if (is_blocked(msg.sender)) return {};
    on_state_notification(msg);
    return {true, {}};
  }

  GuardResult guard = guard_message(msg, v, now);
  ReceiveResult result{guard.action == GuardAction::Process, std::move(guard.notifications)};
  if (!result.processed) return result;

  switch (msg.kind) {
    case MessageKind::Hello: {
      auto im = on_hello(msg, now);
      result.out.insert(result.out.end(), im.begin(), im.end());
      break;
    }
    case MessageKind::Identification:
      on_identification(msg, now);
      break;
    case MessageKind::Trap:
      on_trap(msg, now);
      break;
    case MessageKind::StateNotification:
      break;
  }

  const ClaimSample sample{msg.sender_loc.value(), msg.sent_at};
  auto prev = claims_.find(msg.sender);
  if (prev == claims_.end() || prev->second.time <= sample.time) claims_[msg.sender] = sample;
  return result;
}

}  // namespace flysafe
