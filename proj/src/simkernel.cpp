#include "flysafe/simkernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "flysafe/content_hash.hpp"

namespace flysafe {

namespace {

enum StreamId : std::uint64_t { kMobility = 1, kLoss = 2, kLatency = 3, kAdversary = 4 };

Location3D lerp(const Location3D& a, const Location3D& b, double f) {
  return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f, a.z + (b.z - a.z) * f};
}

}  // namespace

std::mt19937_64 derive_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
  return std::mt19937_64(seq);
}

void RadioConfig::validate() const {
  if (!(range_m > 0.0)) throw std::invalid_argument("radio range_m must be positive");
  if (!(loss_prob >= 0.0 && loss_prob <= 1.0)) {
    throw std::invalid_argument("radio loss_prob must lie in [0, 1]");
  }
  if (!(latency_min_s >= 0.0) || !(latency_max_s >= latency_min_s)) {
    throw std::invalid_argument("radio latency bounds must satisfy 0 <= min <= max");
  }
}

void KernelConfig::validate() const {
  slot.validate();
  radio.validate();
  protocol.validate();
  detector.validate();
  if (!(area.x_max > area.x_min) || !(area.y_max > area.y_min)) {
    throw std::invalid_argument("area must have positive extent");
  }
  if (!(speed >= 0.0)) throw std::invalid_argument("speed must be non-negative");
  if (!(tick_phase > 0.0 && tick_phase < 1.0)) {
    throw std::invalid_argument("tick_phase must lie in (0, 1)");
  }
  // Ticks must land strictly before the next move step.
  if (radio.latency_max_s >= slot.lambda_s) {
    throw std::invalid_argument("radio latency must stay below one slot");
  }
}

// ---- EventQueue ----

std::uint64_t EventQueue::push(SimEvent e) {
  if (!(e.time >= now_)) throw std::invalid_argument("cannot schedule an event in the past");
  e.seq = next_seq_++;
  const std::uint64_t seq = e.seq;
  heap_.push(std::move(e));
  return seq;
}

SimEvent EventQueue::pop() {
  if (heap_.empty()) throw std::logic_error("pop on empty event queue");
  SimEvent e = heap_.top();
  heap_.pop();
  now_ = e.time;
  return e;
}

// ---- Simulation ----

Simulation::Simulation(KernelConfig cfg, std::size_t n_nodes) : cfg_(std::move(cfg)) {
  cfg_.validate();
  init_streams();
  std::uniform_real_distribution<double> ux(cfg_.area.x_min, cfg_.area.x_max);
  std::uniform_real_distribution<double> uy(cfg_.area.y_min, cfg_.area.y_max);
  flyers_.reserve(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const double x = ux(mobility_rng_);
    const double y = uy(mobility_rng_);
    const Location3D p{x, y, cfg_.altitude_m};
    flyers_.emplace_back(Node(UavId{static_cast<std::uint32_t>(i)}, p, cfg_.protocol));
    flyers_.back().slot_start = p;
    flyers_.back().mob.pos = p;
  }
  prime_mobility();
}

Simulation::Simulation(KernelConfig cfg, std::vector<NodeSpec> nodes) : cfg_(std::move(cfg)) {
  cfg_.validate();
  init_streams();
  flyers_.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    NodeSpec& spec = nodes[i];
    const Location3D p = spec.script.empty() ? spec.start : spec.script.front();
    if (!is_valid(p)) throw std::invalid_argument("node start position must be finite");
    flyers_.emplace_back(Node(UavId{static_cast<std::uint32_t>(i)}, p, cfg_.protocol));
    Flyer& f = flyers_.back();
    f.scripted = !spec.script.empty();
    f.script = std::move(spec.script);
    f.slot_start = p;
    f.mob.pos = p;
  }
  prime_mobility();
}

void Simulation::init_streams() {
  mobility_rng_ = derive_stream(cfg_.seed, kMobility);
  loss_rng_ = derive_stream(cfg_.seed, kLoss);
  latency_rng_ = derive_stream(cfg_.seed, kLatency);
  adversary_rng_ = derive_stream(cfg_.seed, kAdversary);
}

void Simulation::prime_mobility() {
  FalsifyParams fp;
  fp.dx = cfg_.adversary.offset_dx;
  fp.dy = cfg_.adversary.offset_dy;
  fp.bounds = cfg_.area;
  fp.range_m = cfg_.radio.range_m;
  for (auto& f : flyers_) {
    if (cfg_.adversary.is_malicious(f.node.id())) {
      f.falsifier.emplace(cfg_.adversary.strategy, fp, 3.0 * cfg_.slot.lambda_s);
    }
    if (f.scripted) continue;
    f.mob.speed = cfg_.speed;
    f.mob.bounds = cfg_.area;
    f.mob.altitude = f.slot_start.z;
    f.mob = step(f.mob, cfg_.slot.lambda_s, mobility_rng_);
    f.mob_slot = 0;
  }
  for (UavId m : cfg_.adversary.malicious_ids) {
    if (m.value >= flyers_.size()) throw std::invalid_argument("malicious id out of range");
  }
}

Simulation::Flyer& Simulation::flyer(UavId id) {
  if (id.value >= flyers_.size()) throw std::out_of_range("unknown node id");
  return flyers_[id.value];
}

const Simulation::Flyer& Simulation::flyer(UavId id) const {
  if (id.value >= flyers_.size()) throw std::out_of_range("unknown node id");
  return flyers_[id.value];
}

Node& Simulation::node(UavId id) { return flyer(id).node; }
const Node& Simulation::node(UavId id) const { return flyer(id).node; }
bool Simulation::active(UavId id) const { return flyer(id).active; }

std::int64_t Simulation::slot_of(double t) const {
  const auto s = static_cast<std::int64_t>(std::floor(t / cfg_.slot.lambda_s + 1e-9));
  return std::max<std::int64_t>(s, 0);
}

Instant Simulation::instant() const { return {now(), slot_of(now())}; }

Location3D Simulation::waypoint(const Flyer& f, std::int64_t slot) const {
  if (f.scripted) {
    const auto last = static_cast<std::int64_t>(f.script.size()) - 1;
    return f.script[static_cast<std::size_t>(std::clamp<std::int64_t>(slot, 0, last))];
  }
  if (slot == f.mob_slot) return f.slot_start;
  if (slot == f.mob_slot + 1) return f.mob.pos;
  throw std::out_of_range("waypoint outside the current slot");
}

Location3D Simulation::true_position(UavId id, double t) const {
  const Flyer& f = flyer(id);
  const double lambda = cfg_.slot.lambda_s;
  if (f.scripted) {
    const std::int64_t k = slot_of(t);
    const double frac = std::clamp((t - static_cast<double>(k) * lambda) / lambda, 0.0, 1.0);
    return lerp(waypoint(f, k), waypoint(f, k + 1), frac);
  }
  const double elapsed = t - static_cast<double>(f.mob_slot) * lambda;
  if (elapsed <= 0.0) return f.slot_start;
  if (elapsed >= lambda) return f.mob.pos;
  // advance() is deterministic, so this retraces the exact path to mob.pos.
  Location3D p = advance(f.slot_start, f.mob.heading, f.mob.speed * elapsed, f.mob.bounds).pos;
  p.z = f.slot_start.z;
  return p;
}

std::uint64_t Simulation::schedule(SimEvent e) { return queue_.push(std::move(e)); }

std::uint32_t Simulation::broadcast(UavId sender, Message msg) {
  Envelope env{std::move(msg), true_position(sender, now())};
  return radiate(sender, std::nullopt, std::move(env)).scheduled;
}

std::uint32_t Simulation::unicast(UavId sender, UavId dest, Message msg) {
  Envelope env{std::move(msg), true_position(sender, now())};
  return radiate(sender, dest, std::move(env)).scheduled;
}

Simulation::Reach Simulation::radiate(UavId sender, std::optional<UavId> dest, Envelope env) {
  if (!active(sender)) return {};
  const double t = now();
  const Location3D from = true_position(sender, t);
  auto shared = std::make_shared<const Envelope>(std::move(env));
  std::bernoulli_distribution lost(cfg_.radio.loss_prob);
  std::uniform_real_distribution<double> latency(cfg_.radio.latency_min_s, cfg_.radio.latency_max_s);

  Reach reach;
  auto try_deliver = [&](const Flyer& rx) {
    if (rx.node.id() == sender || !rx.active) return;
    if (!in_range(from, true_position(rx.node.id(), t), cfg_.radio.range_m)) return;
    ++reach.reachable;
    // Both streams advance once per in-range receiver, whatever the outcome.
    const bool drop = lost(loss_rng_);
    const double delay = cfg_.radio.latency_max_s > cfg_.radio.latency_min_s ? latency(latency_rng_)
                                                                            : cfg_.radio.latency_min_s;
    if (drop) return;
    SimEvent e;
    e.time = t + delay;
    e.kind = EventKind::Deliver;
    e.node = rx.node.id();
    e.slot = slot_of(t);
    e.envelope = shared;
    queue_.push(std::move(e));
    ++reach.scheduled;
  };

  if (dest) {
    try_deliver(flyer(*dest));
  } else {
    for (const auto& f : flyers_) try_deliver(f);
  }
  return reach;
}

void Simulation::transmit(UavId sender, std::vector<Outbound> out) {
  Flyer& f = flyer(sender);
  if (!f.active) return;
  const double t = now();
  for (auto& o : out) {
    Message& m = o.msg;
    m.sent_at = t;
    SendRecord rec{t, sender, m.kind, o.dest};
    std::optional<Location3D> truth;
    if (m.carries_location()) {
      truth = true_position(sender, t);
      m.sender_loc = truth;
      if (f.falsifier && cfg_.adversary.active_at(t)) {
        m.sender_loc = f.falsifier->claim(*truth, t, adversary_rng_);
        rec.falsified = true;
      }
    }
    const Reach reach = radiate(sender, o.dest, Envelope{std::move(m), truth});
    rec.reachable = reach.reachable;
    rec.scheduled = reach.scheduled;
    trace_.sends.push_back(rec);
  }
}

void Simulation::on_move(std::int64_t slot) {
  for (auto& f : flyers_) {
    if (f.scripted) continue;
    f.slot_start = f.mob.pos;
    f.mob = step(f.mob, cfg_.slot.lambda_s, mobility_rng_);
    f.mob_slot = slot;
  }
  const Instant at = instant();
  for (auto& f : flyers_) {
    if (!f.active) continue;
    const Location3D fix = waypoint(f, slot);
    if (fix == f.node.loc()) continue;
    transmit(f.node.id(), f.node.on_location_change(fix, at));
  }
}

void Simulation::on_deliver(const SimEvent& e) {
  Flyer& rx = flyer(e.node);
  if (!rx.active) return;
  const Envelope& env = *e.envelope;
  const Message& msg = env.msg;
  const double t = now();
  const Instant at = instant();
  const Location3D rx_true = true_position(e.node, t);
  rx.node.observe_position(rx_true);

  Verdict v = Verdict::Honest;
  if (msg.carries_location() && !rx.node.is_blocked(msg.sender)) {
    const auto prior = rx.node.claim_history(msg.sender);
    v = assess_claim(prior, *msg.sender_loc, msg.sent_at, cfg_.detector, env.true_loc);
    trace_.verdicts.push_back({t, e.node, msg.sender, v == Verdict::False, prior.has_value(),
                               cfg_.adversary.is_malicious(msg.sender)});
  }

  ReceiveResult r = rx.node.receive(msg, v, at);
  if (r.processed && msg.carries_location()) {
    trace_.accepts.push_back({t, msg.sent_at, e.node, msg.sender, msg.kind, *msg.sender_loc, rx_true,
                              true_position(msg.sender, t)});
  }
  transmit(e.node, std::move(r.out));
}

void Simulation::on_snapshot(std::int64_t slot) {
  std::vector<NodeSnapshot> row;
  row.reserve(flyers_.size());
  for (const auto& f : flyers_) {
    NodeSnapshot s;
    s.pos = waypoint(f, slot);
    s.active = f.active;
    for (const auto& [nid, entry] : f.node.nl()) {
      s.nl.push_back({nid, entry.hops, entry.q.value(), entry.state, entry.loc});
    }
    for (const auto& [sid, sus] : f.node.suspects()) {
      if (sus.blocked) s.blocked.push_back(sid);
    }
    row.push_back(std::move(s));
  }
  trace_.snapshots.push_back(std::move(row));
}

void Simulation::dispatch(const SimEvent& e) {
  trace_.dispatch_log.push_back({e.time, e.seq, e.kind, e.node});
  switch (e.kind) {
    case EventKind::NodeStart: {
      Flyer& f = flyer(e.node);
      f.active = true;
      f.node.observe_position(true_position(e.node, now()));
      transmit(e.node, f.node.on_start(instant()));
      return;
    }
    case EventKind::NodeStop:
      flyer(e.node).active = false;
      return;
    case EventKind::MoveStep:
      on_move(e.slot);
      return;
    case EventKind::SlotTick: {
      Flyer& f = flyer(e.node);
      if (!f.active) return;
      f.node.observe_position(true_position(e.node, now()));
      transmit(e.node, f.node.on_slot_tick(instant()));
      return;
    }
    case EventKind::Deliver:
      on_deliver(e);
      return;
    case EventKind::Snapshot:
      on_snapshot(e.slot);
      return;
  }
}

const SimTrace& Simulation::run(double until) {
  if (!(until >= 0.0)) throw std::invalid_argument("run horizon must be non-negative");
  if (!primed_) {
    primed_ = true;
    const double lambda = cfg_.slot.lambda_s;
    const auto n_slots = static_cast<std::int64_t>(std::floor(until / lambda + 1e-9));
    trace_.lambda_s = lambda;
    trace_.range_m = cfg_.radio.range_m;
    trace_.slot_count = n_slots;
    trace_.node_count = flyers_.size();
    trace_.malicious = cfg_.adversary.malicious_ids;
    std::sort(trace_.malicious.begin(), trace_.malicious.end());

    for (const auto& f : flyers_) queue_.push(make_event(0.0, EventKind::NodeStart, f.node.id()));
    if (n_slots == 0) queue_.push(make_event(0.0, EventKind::Snapshot));
    for (std::int64_t k = 0; k < n_slots; ++k) {
      const double start = static_cast<double>(k) * lambda;
      if (k >= 1) queue_.push(make_event(start, EventKind::MoveStep, {}, k));
      for (const auto& f : flyers_) {
        queue_.push(make_event(start + cfg_.tick_phase * lambda, EventKind::SlotTick, f.node.id(), k));
      }
      queue_.push(make_event(static_cast<double>(k + 1) * lambda, EventKind::Snapshot, {}, k));
    }
  }

  while (!queue_.empty() && queue_.top().time <= until) dispatch(queue_.pop());

  trace_.counters.clear();
  for (const auto& f : flyers_) trace_.counters.push_back(f.node.counters());
  return trace_;
}

// ---- serialization ----

namespace {

class ByteWriter {
 public:
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void loc(const Location3D& p) {
    f64(p.x);
    f64(p.y);
    f64(p.z);
  }
  void id(UavId v) { u64(v.value); }
  void tag(char c) { buf_.push_back(c); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

}  // namespace

std::string serialize(const SimTrace& t) {
  ByteWriter w;
  w.tag('T');
  w.f64(t.lambda_s);
  w.f64(t.range_m);
  w.u64(static_cast<std::uint64_t>(t.slot_count));
  w.u64(t.node_count);
  w.u64(t.malicious.size());
  for (UavId m : t.malicious) w.id(m);

  w.tag('S');
  w.u64(t.snapshots.size());
  for (const auto& row : t.snapshots) {
    for (const auto& s : row) {
      w.loc(s.pos);
      w.u64(s.active ? 1 : 0);
      w.u64(s.nl.size());
      for (const auto& e : s.nl) {
        w.id(e.id);
        w.u64(static_cast<std::uint64_t>(e.hops));
        w.u64(static_cast<std::uint64_t>(e.q));
        w.u64(static_cast<std::uint64_t>(e.state));
        w.loc(e.loc);
      }
      w.u64(s.blocked.size());
      for (UavId b : s.blocked) w.id(b);
    }
  }

  w.tag('X');
  w.u64(t.sends.size());
  for (const auto& s : t.sends) {
    w.f64(s.time);
    w.id(s.sender);
    w.u64(static_cast<std::uint64_t>(s.kind));
    w.u64(s.dest ? s.dest->value + 1ULL : 0ULL);
    w.u64(s.reachable);
    w.u64(s.scheduled);
    w.u64(s.falsified ? 1 : 0);
  }

  w.tag('A');
  w.u64(t.accepts.size());
  for (const auto& a : t.accepts) {
    w.f64(a.recv_time);
    w.f64(a.sent_at);
    w.id(a.receiver);
    w.id(a.sender);
    w.u64(static_cast<std::uint64_t>(a.kind));
    w.loc(a.claimed);
    w.loc(a.receiver_true);
    w.loc(a.sender_true);
  }

  w.tag('V');
  w.u64(t.verdicts.size());
  for (const auto& v : t.verdicts) {
    w.f64(v.time);
    w.id(v.receiver);
    w.id(v.sender);
    w.u64((v.flagged ? 1 : 0) | (v.had_prior ? 2 : 0) | (v.sender_malicious ? 4 : 0));
  }

  w.tag('D');
  w.u64(t.dispatch_log.size());
  for (const auto& d : t.dispatch_log) {
    w.f64(d.time);
    w.u64(d.seq);
    w.u64(static_cast<std::uint64_t>(d.kind));
    w.id(d.node);
  }

  w.tag('C');
  for (const auto& c : t.counters) {
    for (auto v : c.sent) w.u64(v);
    for (auto v : c.received) w.u64(v);
  }
  return w.take();
}

std::string trace_digest(const SimTrace& trace) { return git_blob_sha1(serialize(trace)); }

}  // namespace flysafe
