#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "flysafe/protocol.hpp"
#include "oracles/suspicion_oracle.hpp"

using namespace flysafe;

namespace {

constexpr double kZ = 91.44;
const Instant kT0{0.0, 0};

Location3D at(double x, double y) { return {x, y, kZ}; }

Message located(MessageKind kind, std::uint32_t sender, Location3D loc,
                std::vector<NeighborSnapshot> payload = {}, double sent_at = 0.0) {
  Message m;
  m.kind = kind;
  m.sender = UavId{sender};
  m.sender_loc = loc;
  m.payload_nl = std::move(payload);
  m.sent_at = sent_at;
  return m;
}

Message hm(std::uint32_t s, Location3D l, std::vector<NeighborSnapshot> p = {}) {
  return located(MessageKind::Hello, s, l, std::move(p));
}
Message im(std::uint32_t s, Location3D l, std::vector<NeighborSnapshot> p = {}) {
  return located(MessageKind::Identification, s, l, std::move(p));
}
Message trap_msg(std::uint32_t s, Location3D l, std::vector<NeighborSnapshot> p = {}) {
  return located(MessageKind::Trap, s, l, std::move(p));
}

Message sn(std::uint32_t sender, std::uint32_t target, SuspicionState st) {
  Message m;
  m.kind = MessageKind::StateNotification;
  m.sender = UavId{sender};
  m.sn_target = UavId{target};
  m.sn_state = st;
  return m;
}

std::size_t count_kind(const std::vector<Outbound>& out, MessageKind k) {
  std::size_t n = 0;
  for (const auto& o : out) n += o.msg.kind == k ? 1 : 0;
  return n;
}

Instant slot(std::int64_t k) { return {1.5 * static_cast<double>(k), k}; }

void block(Node& n, std::uint32_t sender) {
  for (int i = 0; i < 3; ++i) n.receive(hm(sender, at(9, 9)), Verdict::False, kT0);
  ASSERT_TRUE(n.is_blocked(UavId{sender}));
}

}  // namespace

// ---- discovery ----

TEST(OnStart, FreshNodeAnnouncesOnce) {
  Node n(UavId{0}, at(0, 0));
  const auto out = n.on_start(kT0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].msg.kind, MessageKind::Hello);
  EXPECT_FALSE(out[0].dest.has_value());
  EXPECT_TRUE(out[0].msg.payload_nl.empty());
  EXPECT_EQ(n.nl().size(), 0u);
}

TEST(OnStart, RestartClearsState) {
  Node n(UavId{0}, at(0, 0));
  n.on_start(kT0);
  n.receive(hm(1, at(10, 0)), Verdict::Honest, kT0);
  n.receive(hm(2, at(20, 0)), Verdict::False, kT0);
  ASSERT_EQ(n.nl().size(), 2u);
  ASSERT_FALSE(n.suspects().empty());
  const auto out = n.on_start(slot(4));
  EXPECT_EQ(out.size(), 1u);
  EXPECT_TRUE(n.nl().empty());
  EXPECT_TRUE(n.suspects().empty());
}

TEST(OnStart, TwoNodesDiscoverEachOther) {
  Node a(UavId{0}, at(0, 0));
  Node b(UavId{1}, at(60, 0));
  auto a_hm = a.on_start(kT0);
  b.on_start(kT0);
  auto reply = b.receive(a_hm[0].msg, Verdict::Honest, kT0);
  ASSERT_EQ(reply.out.size(), 1u);
  EXPECT_EQ(reply.out[0].dest, UavId{0});
  a.receive(reply.out[0].msg, Verdict::Honest, kT0);
  ASSERT_NE(a.nl().find(UavId{1}), nullptr);
  ASSERT_NE(b.nl().find(UavId{0}), nullptr);
  EXPECT_EQ(a.nl().find(UavId{1})->hops, 1);
  EXPECT_EQ(b.nl().find(UavId{0})->hops, 1);
  EXPECT_DOUBLE_EQ(a.nl().find(UavId{1})->distance_m, 60.0);
}

TEST(OnHello, UnknownSenderIsInsertedAndAnswered) {
  Node n(UavId{0}, at(0, 0));
  const auto out = n.on_hello(hm(7, at(30, 40)), kT0);
  const auto* e = n.nl().find(UavId{7});
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->q.value(), 3);
  EXPECT_EQ(e->hops, 1);
  EXPECT_EQ(e->attitude, Attitude::Static);
  EXPECT_EQ(e->state, NodeMark::Honest);
  EXPECT_DOUBLE_EQ(e->distance_m, 50.0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].msg.kind, MessageKind::Identification);
  EXPECT_EQ(out[0].dest, UavId{7});
  EXPECT_EQ(n.counters().sent_of(MessageKind::Identification), 1u);
}

TEST(OnHello, KnownSenderRefreshesQualityAndLocation) {
  Node n(UavId{0}, at(0, 0));
  n.on_hello(hm(7, at(30, 40)), kT0);
  n.on_slot_tick(slot(0));
  n.on_slot_tick(slot(1));
  ASSERT_EQ(n.nl().find(UavId{7})->q.value(), 1);
  n.on_hello(hm(7, at(60, 80)), slot(2));
  const auto* e = n.nl().find(UavId{7});
  EXPECT_EQ(e->q.value(), 3);
  EXPECT_EQ(e->loc, at(60, 80));
  EXPECT_DOUBLE_EQ(e->distance_m, 100.0);
  EXPECT_EQ(e->last_update_slot, 2);
}

TEST(OnHello, BlockedSenderIsIgnored) {
  Node n(UavId{0}, at(0, 0));
  block(n, 4);
  const auto before = n.counters().sent_of(MessageKind::Identification);
  const auto r = n.receive(hm(4, at(1, 1)), Verdict::Honest, kT0);
  EXPECT_FALSE(r.processed);
  EXPECT_TRUE(r.out.empty());
  EXPECT_FALSE(n.nl().contains(UavId{4}));
  EXPECT_EQ(n.counters().sent_of(MessageKind::Identification), before);
  EXPECT_TRUE(n.on_hello(hm(4, at(1, 1)), kT0).empty());
}

TEST(OnIdentification, PayloadBecomesTwoHop) {
  Node n(UavId{0}, at(0, 0));
  n.on_identification(im(1, at(10, 0), {{UavId{2}, at(20, 0), 1}, {UavId{3}, at(30, 0), 1}, {UavId{4}, at(40, 0), 1}}),
                      kT0);
  EXPECT_EQ(n.nl().size(), 4u);
  EXPECT_EQ(n.nl().find(UavId{1})->hops, 1);
  for (std::uint32_t id : {2u, 3u, 4u}) {
    const auto* e = n.nl().find(UavId{id});
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->hops, 2);
    EXPECT_EQ(e->q.value(), 3);
    EXPECT_DOUBLE_EQ(e->distance_m, 10.0 * id);
  }
}

TEST(OnIdentification, SelfInPayloadIsSkipped) {
  Node n(UavId{0}, at(0, 0));
  n.on_identification(im(1, at(10, 0), {{UavId{0}, at(5, 5), 1}}), kT0);
  EXPECT_EQ(n.nl().size(), 1u);
  EXPECT_FALSE(n.nl().contains(UavId{0}));
}

TEST(OnIdentification, OneHopEntryOnlyGetsLocationRefresh) {
  Node n(UavId{0}, at(0, 0));
  n.on_hello(hm(2, at(20, 0)), kT0);
  n.on_slot_tick(slot(0));
  n.on_identification(im(1, at(10, 0), {{UavId{2}, at(25, 0), 1}}), slot(1));
  const auto* e = n.nl().find(UavId{2});
  EXPECT_EQ(e->hops, 1);
  EXPECT_EQ(e->loc, at(25, 0));
  EXPECT_DOUBLE_EQ(e->distance_m, 25.0);
  EXPECT_EQ(e->q.value(), 2);
}

// Every (stored hop, incoming hop) combination against the merge rule.
TEST(MergeNeighborNl, AllHopPairs) {
  for (int stored : {0, 1, 2}) {  // 0 = absent
    for (int incoming : {1, 2}) {
      Node n(UavId{0}, at(0, 0));
      if (stored == 1) n.on_hello(hm(5, at(50, 0)), kT0);
      if (stored == 2) n.merge_neighbor_nl(std::vector<NeighborSnapshot>{{UavId{5}, at(50, 0), 1}}, kT0);
      if (stored != 0) n.on_slot_tick(slot(0));  // q = 2, so a refresh would show
      n.merge_neighbor_nl(std::vector<NeighborSnapshot>{{UavId{5}, at(0, 70), incoming}}, slot(1));
      const auto* e = n.nl().find(UavId{5});
      ASSERT_NE(e, nullptr);
      const int want_hops = stored == 0 ? 2 : stored;
      EXPECT_EQ(e->hops, want_hops) << stored << "/" << incoming;
      EXPECT_EQ(e->loc, at(0, 70));
      EXPECT_NEAR(e->distance_m, distance(n.loc(), e->loc), 1e-9);
      EXPECT_EQ(e->q.value(), stored == 0 ? 3 : 2);
    }
  }
}

TEST(MergeNeighborNl, SuspectEntryIsNotOverwritten) {
  Node n(UavId{0}, at(0, 0));
  n.receive(hm(5, at(50, 0)), Verdict::False, kT0);
  ASSERT_EQ(n.nl().find(UavId{5})->state, NodeMark::Malicious);
  n.merge_neighbor_nl(std::vector<NeighborSnapshot>{{UavId{5}, at(0, 70), 1}}, kT0);
  EXPECT_EQ(n.nl().find(UavId{5})->loc, at(50, 0));
}

// ---- maintenance ----

TEST(OnSlotTick, EntrySurvivesExactlyThreeTicks) {
  for (int refresh_after = 0; refresh_after < 3; ++refresh_after) {
    Node n(UavId{0}, at(0, 0));
    n.on_hello(hm(1, at(10, 0)), kT0);
    std::int64_t k = 0;
    for (int i = 0; i < refresh_after; ++i) n.on_slot_tick(slot(k++));
    n.on_trap(trap_msg(1, at(11, 0)), slot(k));  // last q = 3 refresh
    n.on_slot_tick(slot(k++));
    EXPECT_TRUE(n.nl().contains(UavId{1}));
    n.on_slot_tick(slot(k++));
    EXPECT_TRUE(n.nl().contains(UavId{1}));
    n.on_slot_tick(slot(k++));
    EXPECT_FALSE(n.nl().contains(UavId{1}));
  }
}

TEST(OnSlotTick, OnlyTwoHopEntriesTriggerAnnounce) {
  Node n(UavId{0}, at(0, 0));
  n.merge_neighbor_nl(std::vector<NeighborSnapshot>{{UavId{3}, at(100, 0), 1}}, kT0);
  const auto out = n.on_slot_tick(slot(0));
  EXPECT_EQ(count_kind(out, MessageKind::Hello), 1u);
}

TEST(OnSlotTick, OneHopNeighborSuppressesAnnounce) {
  Node n(UavId{0}, at(0, 0));
  n.on_hello(hm(1, at(10, 0)), kT0);
  n.on_slot_tick(slot(0));
  ASSERT_EQ(n.nl().find(UavId{1})->q.value(), 2);
  const auto out = n.on_slot_tick(slot(1));
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(n.nl().find(UavId{1})->q.value(), 1);
}

TEST(OnSlotTick, AtMostOneHelloPerSlot) {
  Node n(UavId{0}, at(0, 0));
  EXPECT_EQ(n.on_start(slot(0)).size(), 1u);
  EXPECT_TRUE(n.on_slot_tick(slot(0)).empty());
  EXPECT_EQ(n.on_slot_tick(slot(1)).size(), 1u);
  EXPECT_TRUE(n.on_location_change(at(1, 1), slot(1)).empty());
  EXPECT_EQ(n.on_location_change(at(2, 2), slot(2)).size(), 1u);
}

TEST(OnLocationChange, TrapsGoToOneHopNeighborsOnly) {
  Node n(UavId{0}, at(0, 0));
  for (std::uint32_t id : {1u, 2u, 3u}) n.on_hello(hm(id, at(10.0 * id, 0)), kT0);
  n.merge_neighbor_nl(std::vector<NeighborSnapshot>{{UavId{8}, at(150, 0), 1}, {UavId{9}, at(160, 0), 1}}, kT0);
  const auto out = n.on_location_change(at(5, 5), slot(1));
  EXPECT_EQ(out.size(), 3u);
  EXPECT_EQ(count_kind(out, MessageKind::Trap), 3u);
  for (const auto& o : out) {
    ASSERT_TRUE(o.dest.has_value());
    EXPECT_LE(o.dest->value, 3u);
    EXPECT_EQ(o.msg.sender_loc, at(5, 5));
    EXPECT_EQ(o.msg.payload_nl.size(), 5u);
  }
  EXPECT_EQ(n.prev_loc(), at(0, 0));
  EXPECT_EQ(n.loc(), at(5, 5));
}

TEST(OnLocationChange, EmptyListAnnounces) {
  Node n(UavId{0}, at(0, 0));
  const auto out = n.on_location_change(at(1, 0), slot(3));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].msg.kind, MessageKind::Hello);
}

TEST(OnLocationChange, SuspectStillReceivesTrap) {
  Node n(UavId{0}, at(0, 0));
  n.receive(hm(1, at(10, 0)), Verdict::Honest, kT0);
  n.receive(hm(2, at(20, 0)), Verdict::False, kT0);
  ASSERT_TRUE(n.is_suspect(UavId{2}));
  const auto out = n.on_location_change(at(1, 0), slot(1));
  EXPECT_EQ(out.size(), 2u);
}

TEST(OnTrap, ApproachingSenderIsInbound) {
  Node n(UavId{0}, at(0, 0));
  n.on_hello(hm(1, at(80, 0)), kT0);
  n.on_trap(trap_msg(1, at(70, 0)), slot(1));
  const auto* e = n.nl().find(UavId{1});
  EXPECT_EQ(e->attitude, Attitude::Inbound);
  EXPECT_NEAR(e->distance_m, 70.0, 1e-12);
  n.on_trap(trap_msg(1, at(90, 0)), slot(2));
  EXPECT_EQ(n.nl().find(UavId{1})->attitude, Attitude::Outbound);
}

TEST(OnTrap, UnknownSenderBecomesOneHop) {
  Node n(UavId{0}, at(0, 0));
  n.on_trap(trap_msg(6, at(30, 0)), kT0);
  ASSERT_NE(n.nl().find(UavId{6}), nullptr);
  EXPECT_EQ(n.nl().find(UavId{6})->hops, 1);
}

TEST(OnTrap, PayloadRefreshesStaleTwoHop) {
  Node n(UavId{0}, at(0, 0));
  n.merge_neighbor_nl(std::vector<NeighborSnapshot>{{UavId{9}, at(200, 0), 1}}, kT0);
  n.on_trap(trap_msg(1, at(30, 0), {{UavId{9}, at(210, 0), 1}}), slot(1));
  EXPECT_EQ(n.nl().find(UavId{9})->loc, at(210, 0));
  EXPECT_EQ(n.nl().find(UavId{9})->hops, 2);
}

// ---- false-location management ----

TEST(Guard, ThreeFalseBlocksOnTheThird) {
  Node n(UavId{0}, at(0, 0));
  n.receive(hm(1, at(10, 0)), Verdict::Honest, kT0);
  n.receive(hm(2, at(20, 0)), Verdict::Honest, kT0);
  auto r1 = n.receive(hm(2, at(999, 0)), Verdict::False, kT0);
  EXPECT_TRUE(r1.processed);
  EXPECT_EQ(count_kind(r1.out, MessageKind::StateNotification), 1u);  // to node 1 only
  auto r2 = n.receive(hm(2, at(999, 0)), Verdict::False, kT0);
  EXPECT_FALSE(r2.processed);
  EXPECT_TRUE(r2.out.empty());
  auto r3 = n.receive(hm(2, at(999, 0)), Verdict::False, kT0);
  EXPECT_FALSE(r3.processed);
  ASSERT_EQ(r3.out.size(), 1u);
  EXPECT_EQ(r3.out[0].dest, UavId{1});
  EXPECT_EQ(r3.out[0].msg.sn_state, SuspicionState::Blocked);
  EXPECT_EQ(r3.out[0].msg.sn_target, UavId{2});
  EXPECT_TRUE(n.is_blocked(UavId{2}));
  EXPECT_FALSE(n.nl().contains(UavId{2}));
}

TEST(Guard, SuspectRehabilitatesAfterTwoTrue) {
  Node n(UavId{0}, at(0, 0));
  n.receive(hm(1, at(10, 0)), Verdict::Honest, kT0);
  n.receive(hm(2, at(20, 0)), Verdict::False, kT0);
  n.receive(hm(2, at(20, 0)), Verdict::False, kT0);
  ASSERT_EQ(n.suspects().at(UavId{2}).recurrence, 2);
  auto t1 = n.receive(hm(2, at(20, 0)), Verdict::Honest, kT0);
  EXPECT_TRUE(t1.processed);
  EXPECT_TRUE(n.is_suspect(UavId{2}));
  auto t2 = n.receive(hm(2, at(20, 0)), Verdict::Honest, kT0);
  EXPECT_TRUE(t2.processed);
  EXPECT_FALSE(n.is_suspect(UavId{2}));
  EXPECT_EQ(n.nl().find(UavId{2})->state, NodeMark::Honest);
  bool honest_sn = false;
  for (const auto& o : t2.out) {
    honest_sn |= o.msg.kind == MessageKind::StateNotification && o.msg.sn_state == SuspicionState::Honest;
  }
  EXPECT_TRUE(honest_sn);
}

TEST(Guard, FalseTrueThenThreeFalseBlocksOnFifth) {
  Node n(UavId{0}, at(0, 0));
  const Verdict seq[] = {Verdict::False, Verdict::Honest, Verdict::False, Verdict::False, Verdict::False};
  const int want_r[] = {1, 0, 1, 2, 3};
  for (int i = 0; i < 5; ++i) {
    n.receive(hm(3, at(10, 0)), seq[i], kT0);
    const auto it = n.suspects().find(UavId{3});
    const int r = it == n.suspects().end() ? 0 : it->second.recurrence;
    EXPECT_EQ(r, want_r[i]) << "message " << i + 1;
    EXPECT_EQ(n.is_blocked(UavId{3}), i == 4);
  }
}

// Every verdict sequence up to length 6 against the hand-coded counter.
TEST(Guard, ExhaustiveAgainstCounterOracle) {
  std::size_t checked = 0;
  for (int len = 1; len <= 6; ++len) {
    for (int mask = 0; mask < (1 << len); ++mask) {
      Node n(UavId{0}, at(0, 0));
      n.receive(hm(1, at(10, 0)), Verdict::Honest, kT0);  // an SN audience
      oracle::SuspicionCounter ref;
      for (int i = 0; i < len; ++i) {
        const bool is_false = (mask >> i) & 1;
        const auto got = n.receive(hm(2, at(20, 0)), is_false ? Verdict::False : Verdict::Honest, kT0);
        const auto want = ref.feed(is_false);
        ASSERT_EQ(got.processed, want.act == oracle::Act::Process) << mask << "@" << i;
        oracle::Note note = oracle::Note::None;
        for (const auto& o : got.out) {
          if (o.msg.kind != MessageKind::StateNotification) continue;
          note = o.msg.sn_state == SuspicionState::Suspect   ? oracle::Note::Suspect
                 : o.msg.sn_state == SuspicionState::Blocked ? oracle::Note::Blocked
                                                             : oracle::Note::Honest;
        }
        ASSERT_EQ(note, want.note) << mask << "@" << i;
        const auto it = n.suspects().find(UavId{2});
        const bool in_sl = it != n.suspects().end();
        ASSERT_EQ(in_sl && !it->second.blocked, want.in_sl && !want.blocked);
        ASSERT_EQ(n.is_blocked(UavId{2}), want.blocked);
        if (in_sl) {
          ASSERT_EQ(it->second.recurrence, want.r);
        }
        if (in_sl) {
          ASSERT_GE(it->second.recurrence, 0);
        }
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 642u);
}

TEST(StateNotification, BlockedRemovesTarget) {
  Node n(UavId{0}, at(0, 0));
  n.on_hello(hm(1, at(10, 0)), kT0);
  n.on_hello(hm(5, at(50, 0)), kT0);
  n.receive(sn(1, 5, SuspicionState::Blocked), Verdict::Honest, kT0);
  EXPECT_FALSE(n.nl().contains(UavId{5}));
  EXPECT_TRUE(n.is_blocked(UavId{5}));
  EXPECT_GE(n.suspects().at(UavId{5}).recurrence, 3);
}

TEST(StateNotification, HonestAboutUnknownIsNoop) {
  Node n(UavId{0}, at(0, 0));
  n.receive(sn(1, 5, SuspicionState::Honest), Verdict::Honest, kT0);
  EXPECT_TRUE(n.suspects().empty());
  EXPECT_TRUE(n.nl().empty());
}

TEST(StateNotification, SuspectAboutUnknownIsRemembered) {
  Node n(UavId{0}, at(0, 0));
  n.receive(sn(1, 5, SuspicionState::Suspect), Verdict::Honest, kT0);
  ASSERT_TRUE(n.is_suspect(UavId{5}));
  EXPECT_EQ(n.suspects().at(UavId{5}).recurrence, 1);
  // first contact already starts suspicious
  n.receive(hm(5, at(50, 0)), Verdict::Honest, kT0);
  EXPECT_FALSE(n.is_suspect(UavId{5}));
  n.receive(sn(1, 6, SuspicionState::Suspect), Verdict::Honest, kT0);
  n.receive(hm(6, at(60, 0)), Verdict::False, kT0);
  EXPECT_EQ(n.suspects().at(UavId{6}).recurrence, 2);
}

TEST(StateNotification, AboutSelfIsIgnored) {
  Node n(UavId{0}, at(0, 0));
  n.receive(sn(1, 0, SuspicionState::Blocked), Verdict::Honest, kT0);
  EXPECT_TRUE(n.suspects().empty());
}

TEST(StateNotification, ThreeNodePropagation) {
  Node a(UavId{0}, at(0, 0)), b(UavId{1}, at(50, 0));
  const UavId mal{2};
  a.receive(hm(1, at(50, 0)), Verdict::Honest, kT0);
  b.receive(hm(0, at(0, 0)), Verdict::Honest, kT0);
  const auto r = a.receive(hm(2, at(25, 40)), Verdict::False, kT0);
  ASSERT_EQ(r.out.size(), 2u);  // IM back to the MalUAV plus one SN to b
  for (const auto& o : r.out) {
    if (o.msg.kind == MessageKind::StateNotification) b.receive(o.msg, Verdict::Honest, kT0);
  }
  EXPECT_TRUE(b.is_suspect(mal));
}

// ---- invariants ----

TEST(Invariants, RandomTrafficKeepsContracts) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::uint32_t> who(1, 6);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 200; ++trial) {
    Node n(UavId{0}, at(0, 0));
    MessageCounters prev{};
    std::int64_t k = 0;
    for (int step = 0; step < 300; ++step) {
      const auto roll = rng() % 10;
      std::vector<Outbound> out;
      if (roll == 0) {
        out = n.on_slot_tick(slot(k++));
      } else if (roll == 1) {
        out = n.on_location_change(at(u(rng), u(rng)), slot(k));
      } else if (roll == 2) {
        const auto st = static_cast<SuspicionState>(rng() % 3);
        n.receive(sn(who(rng), who(rng), st), Verdict::Honest, slot(k));
      } else {
        std::vector<NeighborSnapshot> payload;
        for (int p = 0; p < 3; ++p) payload.push_back({UavId{who(rng)}, at(u(rng), u(rng)), 1});
        const auto kind = static_cast<MessageKind>(rng() % 3);
        const std::uint32_t sender = who(rng);
        const bool was_blocked = n.is_blocked(UavId{sender});
        const auto hm_before = n.counters().sent_of(MessageKind::Identification);
        const auto r = n.receive(located(kind, sender, at(u(rng), u(rng)), payload),
                                 rng() % 4 == 0 ? Verdict::False : Verdict::Honest, slot(k));
        if (kind == MessageKind::Hello && r.processed) {
          ASSERT_EQ(n.counters().sent_of(MessageKind::Identification), hm_before + 1);
        }
        if (was_blocked) {
          ASSERT_FALSE(r.processed);
        }
      }
      for (const auto& [id, e] : n.nl()) {
        ASSERT_FALSE(n.is_blocked(id));
        if (e.state == NodeMark::Malicious) {
          ASSERT_TRUE(n.is_suspect(id));
        }
        ASSERT_NE(id, n.id());
      }
      for (const auto& [id, s] : n.suspects()) {
        ASSERT_GE(s.recurrence, 0);
        if (!s.blocked) {
          ASSERT_GT(s.recurrence, 0);
        }
      }
      const auto& c = n.counters();
      ASSERT_LE(c.sent_of(MessageKind::Identification), c.received_of(MessageKind::Hello));
      for (std::size_t i = 0; i < kMessageKindCount; ++i) {
        ASSERT_GE(c.sent[i], prev.sent[i]);
        ASSERT_GE(c.received[i], prev.received[i]);
      }
      prev = c;
    }
  }
}

TEST(Invariants, NeighborEntryDistanceMatchesAtUpdate) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 100);
  Node n(UavId{0}, at(0, 0));
  for (int i = 0; i < 10000; ++i) {
    const Location3D me = at(u(rng), u(rng));
    n.observe_position(me);
    const Location3D there = at(u(rng), u(rng));
    const auto kind = static_cast<MessageKind>(rng() % 3);
    n.receive(located(kind, 1 + static_cast<std::uint32_t>(rng() % 5), there,
                      {{UavId{9}, at(u(rng), u(rng)), 1}}),
              Verdict::Honest, kT0);
    for (const auto& [id, e] : n.nl()) {
      if (e.last_update_slot == kT0.slot && e.loc == there) {
        ASSERT_NEAR(e.distance_m, distance(me, e.loc), 1e-9);
      }
    }
    const auto* nine = n.nl().find(UavId{9});
    ASSERT_NE(nine, nullptr);
    ASSERT_NEAR(nine->distance_m, distance(me, nine->loc), 1e-9);
  }
}

TEST(Invariants, BlockedNeverReenters) {
  Node n(UavId{0}, at(0, 0));
  block(n, 4);
  const std::vector<NeighborSnapshot> carrying{{UavId{4}, at(40, 0), 1}};
  n.receive(hm(1, at(10, 0), carrying), Verdict::Honest, kT0);
  n.receive(im(2, at(20, 0), carrying), Verdict::Honest, kT0);
  n.receive(trap_msg(3, at(30, 0), carrying), Verdict::Honest, kT0);
  n.receive(trap_msg(4, at(40, 0)), Verdict::Honest, kT0);
  n.receive(im(4, at(40, 0)), Verdict::Honest, kT0);
  n.merge_neighbor_nl(carrying, kT0);
  EXPECT_FALSE(n.nl().contains(UavId{4}));
}
