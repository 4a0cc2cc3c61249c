#include "flysafe/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace flysafe {

bool is_valid(const Location3D& loc) {
  return std::isfinite(loc.x) && std::isfinite(loc.y) && std::isfinite(loc.z) && loc.z >= 0.0;
}

QualityFlag::QualityFlag(int q) : q_(q) {
  if (q < 0 || q > kMax) {
    throw std::invalid_argument("quality flag out of range: " + std::to_string(q));
  }
}

NeighborEntry& NeighborList::upsert(const NeighborEntry& entry) {
  if (entry.id == owner_) {
    throw std::invalid_argument("neighbor list cannot hold its owner " +
                                std::to_string(owner_.value));
  }
  auto& slot = entries_[entry.id];
  slot = entry;
  return slot;
}

bool NeighborList::erase(UavId id) { return entries_.erase(id) != 0; }

NeighborEntry* NeighborList::find(UavId id) {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

const NeighborEntry* NeighborList::find(UavId id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::size_t NeighborList::one_hop_count() const {
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.end(), [](const auto& kv) { return kv.second.hops == 1; }));
}

bool NeighborList::only_beyond_one_hop() const {
  return !entries_.empty() && one_hop_count() == 0;
}

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::Hello:
      return "hm";
    case MessageKind::Identification:
      return "im";
    case MessageKind::Trap:
      return "tm";
    case MessageKind::StateNotification:
      return "sn";
  }
  return "?";
}

void SlotConfig::validate() const {
  if (!(lambda_min > 0.0) || !(lambda_min <= lambda_s) || !(lambda_s <= lambda_max)) {
    throw std::invalid_argument("slot config requires 0 < lambda_min <= lambda_s <= lambda_max");
  }
}

double distance(const Location3D& a, const Location3D& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool in_range(const Location3D& a, const Location3D& b, double r) { return distance(a, b) <= r; }

Attitude classify_attitude(double prev_d, double new_d, double eps) {
  if (new_d < prev_d - eps) return Attitude::Inbound;
  if (new_d > prev_d + eps) return Attitude::Outbound;
  return Attitude::Static;
}

}  // namespace flysafe
