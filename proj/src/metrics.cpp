#include "flysafe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace flysafe {

namespace {

const NodeSnapshot& snapshot(const SimTrace& trace, UavId node, std::int64_t slot) {
  if (slot < 0 || slot >= trace.slot_count) throw std::out_of_range("slot outside the trace");
  const auto& row = trace.snapshots.at(static_cast<std::size_t>(slot));
  return row.at(node.value);
}

std::vector<UavId> perceived(const NodeSnapshot& snap) {
  return snap.active ? perceived_one_hop(snap) : std::vector<UavId>{};
}

std::int64_t slot_index(double t, double lambda) {
  return static_cast<std::int64_t>(std::floor(t / lambda + 1e-9));
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

bool located_update(MessageKind k) { return k != MessageKind::StateNotification; }

}  // namespace

GroundTruthView::GroundTruthView(const SimTrace& trace, MetricsOptions opts) {
  truth_.resize(static_cast<std::size_t>(trace.slot_count));
  for (std::size_t s = 0; s < truth_.size(); ++s) {
    const auto& row = trace.snapshots.at(s);
    auto& out = truth_[s];
    out.resize(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!row[j].active) continue;
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i == j || !row[i].active) continue;
        if (!in_range(row[j].pos, row[i].pos, trace.range_m)) continue;
        const UavId id{static_cast<std::uint32_t>(i)};
        if (opts.gt_excludes_blocked &&
            std::binary_search(row[j].blocked.begin(), row[j].blocked.end(), id)) {
          continue;
        }
        out[j].push_back(id);
      }
    }
  }
}

const std::vector<UavId>& GroundTruthView::at(std::int64_t slot, UavId node) const {
  if (slot < 0 || slot >= slot_count()) throw std::out_of_range("slot outside the ground truth");
  return truth_[static_cast<std::size_t>(slot)].at(node.value);
}

std::vector<UavId> perceived_one_hop(const NodeSnapshot& snap) {
  std::vector<UavId> out;
  for (const auto& row : snap.nl) {
    if (row.hops != 1) continue;
    if (std::binary_search(snap.blocked.begin(), snap.blocked.end(), row.id)) continue;
    out.push_back(row.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int gamma(const SimTrace& trace, const GroundTruthView& gt, UavId node, std::int64_t slot) {
  const auto w = perceived(snapshot(trace, node, slot)).size();
  return static_cast<int>(w) - static_cast<int>(gt.at(slot, node).size());
}

std::vector<int> gamma_series(const SimTrace& trace, const GroundTruthView& gt, UavId node) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(trace.slot_count));
  for (std::int64_t s = 0; s < trace.slot_count; ++s) out.push_back(gamma(trace, gt, node, s));
  return out;
}

bool aware(const SimTrace& trace, const GroundTruthView& gt, UavId node, std::int64_t slot) {
  return perceived(snapshot(trace, node, slot)) == gt.at(slot, node);
}

std::vector<bool> awareness_series(const SimTrace& trace, const GroundTruthView& gt, UavId node) {
  std::vector<bool> out;
  out.reserve(static_cast<std::size_t>(trace.slot_count));
  for (std::int64_t s = 0; s < trace.slot_count; ++s) out.push_back(aware(trace, gt, node, s));
  return out;
}

double psi(const SimTrace& trace, const GroundTruthView& gt, UavId node) {
  const auto series = awareness_series(trace, gt, node);
  const auto n = std::count(series.begin(), series.end(), true);
  return static_cast<double>(n) * trace.lambda_s;
}

AoiiResult aoii(const SimTrace& trace, const GroundTruthView& gt, UavId node) {
  AoiiResult r;
  std::int64_t run = 0;
  std::int64_t unaware = 0;
  auto close = [&] {
    if (run == 0) return;
    r.intervals_s.push_back(static_cast<double>(run) * trace.lambda_s);
    run = 0;
  };
  for (bool a : awareness_series(trace, gt, node)) {
    if (a) {
      close();
    } else {
      ++run;
      ++unaware;
    }
  }
  close();
  r.total_s = static_cast<double>(unaware) * trace.lambda_s;
  if (!r.intervals_s.empty()) {
    double sum = 0.0;
    for (double d : r.intervals_s) sum += d;
    r.mean_s = sum / static_cast<double>(r.intervals_s.size());
    r.max_s = *std::max_element(r.intervals_s.begin(), r.intervals_s.end());
  }
  return r;
}

double aoi(const SimTrace& trace, UavId node) {
  const double tau = trace.duration_s();
  if (!(tau > 0.0)) return 0.0;
  double origin = 0.0;  // send time of the freshest update so far
  double t_prev = 0.0;
  double area = 0.0;
  auto integrate_to = [&](double t) {
    area += ((t - origin) * (t - origin) - (t_prev - origin) * (t_prev - origin)) / 2.0;
    t_prev = t;
  };
  for (const auto& a : trace.accepts) {
    if (a.receiver != node || !located_update(a.kind)) continue;
    if (a.recv_time > tau) break;
    integrate_to(a.recv_time);
    origin = std::max(origin, a.sent_at);
  }
  integrate_to(tau);
  return area / tau;
}

std::vector<double> omega_samples(const SimTrace& trace, UavId node) {
  std::vector<double> out;
  for (const auto& a : trace.accepts) {
    if (a.receiver != node || !located_update(a.kind)) continue;
    const double d_r = distance(a.receiver_true, a.claimed);
    const double d_m = distance(a.receiver_true, a.sender_true);
    out.push_back(std::abs(d_r - d_m));
  }
  return out;
}

UpsilonResult upsilon(const SimTrace& trace, UavId node) {
  std::map<UavId, std::vector<const AcceptRecord*>> by_sender;
  for (const auto& a : trace.accepts) {
    if (a.receiver == node && located_update(a.kind)) by_sender[a.sender].push_back(&a);
  }
  const double window = 3.0 * trace.lambda_s;
  UpsilonResult r;
  for (const auto& s : trace.sends) {
    if (s.kind != MessageKind::Trap || !s.dest || *s.dest != node || s.reachable == 0) continue;
    const double t_d = s.time;
    std::optional<double> t_r;
    auto it = by_sender.find(s.sender);
    if (it != by_sender.end()) {
      const auto& list = it->second;
      auto from = std::lower_bound(list.begin(), list.end(), t_d,
                                   [](const AcceptRecord* a, double t) { return a->recv_time < t; });
      for (; from != list.end() && (*from)->recv_time - t_d <= window; ++from) {
        if ((*from)->sent_at >= t_d) {
          t_r = (*from)->recv_time;
          break;
        }
      }
    }
    if (t_r) {
      r.samples_s.push_back(*t_r - t_d);
    } else {
      ++r.unmatched;
    }
  }
  return r;
}

std::uint64_t phi(const SimTrace& trace, const GroundTruthView& gt, UavId node) {
  const auto series = awareness_series(trace, gt, node);
  std::uint64_t n = 0;
  for (const auto& s : trace.sends) {
    if (s.sender != node || s.kind == MessageKind::StateNotification) continue;
    const std::int64_t slot = slot_index(s.time, trace.lambda_s);
    if (slot < 0 || slot >= trace.slot_count) continue;
    if (!series[static_cast<std::size_t>(slot)]) ++n;
  }
  return n;
}

double ConfusionMatrix::diagonal_share_up_to(std::size_t k) const {
  std::uint64_t diag = 0;
  std::uint64_t low = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    diag += counts[i][i];
    if (i <= k) low += counts[i][i];
  }
  return diag == 0 ? 0.0 : static_cast<double>(low) / static_cast<double>(diag);
}

ConfusionMatrix gamma_confusion(const SimTrace& trace, const GroundTruthView& gt, UavId node) {
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  std::size_t dim = 1;
  for (std::int64_t s = 0; s < trace.slot_count; ++s) {
    const std::size_t truth = gt.at(s, node).size();
    const std::size_t seen = perceived(snapshot(trace, node, s)).size();
    cells.emplace_back(truth, seen);
    dim = std::max({dim, truth + 1, seen + 1});
  }

  ConfusionMatrix m;
  m.counts.assign(dim, std::vector<std::uint64_t>(dim, 0));
  m.freq.assign(dim, std::vector<double>(dim, 0.0));
  std::uint64_t diag = 0, over = 0, under = 0;
  for (auto [truth, seen] : cells) {
    ++m.counts[truth][seen];
    if (seen == truth) {
      ++diag;
    } else if (seen > truth) {
      ++over;
    } else {
      ++under;
    }
  }
  m.total = cells.size();
  for (std::size_t i = 0; i < dim; ++i) {
    std::uint64_t row = 0;
    for (auto c : m.counts[i]) row += c;
    if (row == 0) continue;
    for (std::size_t j = 0; j < dim; ++j) {
      m.freq[i][j] = static_cast<double>(m.counts[i][j]) / static_cast<double>(row);
    }
  }
  if (m.total > 0) {
    const auto tot = static_cast<double>(m.total);
    m.accuracy = static_cast<double>(diag) / tot;
    m.fp_rate = static_cast<double>(over) / tot;
    m.fn_rate = static_cast<double>(under) / tot;
  }
  return m;
}

std::vector<std::int64_t> accumulated_gamma(const std::vector<int>& gamma) {
  std::vector<std::int64_t> out;
  out.reserve(gamma.size());
  std::int64_t acc = 0;
  for (int g : gamma) {
    acc += std::abs(g);
    out.push_back(acc);
  }
  return out;
}

std::vector<NodeMetrics> compute_node_metrics(const SimTrace& trace, MetricsOptions opts) {
  const GroundTruthView gt(trace, opts);
  std::vector<NodeMetrics> out;
  out.reserve(trace.node_count);
  for (std::size_t j = 0; j < trace.node_count; ++j) {
    const UavId id{static_cast<std::uint32_t>(j)};
    NodeMetrics m;
    m.id = id;
    m.psi_s = psi(trace, gt, id);
    const AoiiResult ai = aoii(trace, gt, id);
    m.aoii_total_s = ai.total_s;
    m.aoii_mean_s = ai.mean_s;
    m.aoii_max_s = ai.max_s;
    m.aoi_mean_s = aoi(trace, id);
    m.omega_mean_m = mean_of(omega_samples(trace, id));
    const auto g = gamma_series(trace, gt, id);
    if (!g.empty()) {
      double sum = 0.0;
      for (int x : g) sum += std::abs(x);
      m.gamma_mean = sum / static_cast<double>(g.size());
    }
    m.phi = phi(trace, gt, id);
    const UpsilonResult u = upsilon(trace, id);
    m.upsilon_mean_ms = mean_of(u.samples_s) * 1000.0;
    m.upsilon_unmatched = u.unmatched;
    if (j < trace.counters.size()) m.counters = trace.counters[j];
    out.push_back(m);
  }
  return out;
}

}  // namespace flysafe
