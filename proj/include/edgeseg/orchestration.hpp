#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "edgeseg/errors.hpp"
#include "edgeseg/latency.hpp"
#include "edgeseg/model.hpp"
#include "edgeseg/segmentation.hpp"

namespace edgeseg {

enum class PlacementOutcome { PlacedEdge, FailedCapacity };

struct PlacementDecision {
  std::optional<DeviceId> device;
  PlacementOutcome outcome = PlacementOutcome::FailedCapacity;
  int candidate_count = 0;        // feasible candidates (reachable with a free slot)
  double est_latency_ms = 0.0;    // measured user-device latency of the chosen device
};

// Geometry of the owning subspace frozen at placement time; used for the
// mobility-failure check regardless of later re-segmentation.
struct SubspaceSnapshot {
  Vec2 center;
  double boundary = 0.0;
};

// Devices eligible for a user's tasks. Partitioned policies restrict to the
// user's subspace; nomads borrow the nearest subspace's pool; the monolithic
// baseline (or a missing segmentation) sees every device.
inline std::vector<DeviceId> candidate_pool(const EndUser& user, const Segmentation* seg,
                                            const std::vector<EdgeDevice>& devices, Policy policy) {
  std::vector<DeviceId> all;
  if (policy == Policy::Monolithic || seg == nullptr || seg->subspaces.empty()) {
    all.reserve(devices.size());
    for (const auto& d : devices) all.push_back(d.id);
    return all;
  }
  for (const auto& s : seg->subspaces)
    if (std::binary_search(s.members.begin(), s.members.end(), user.id)) return s.devices;
  // Nomad: nearest subspace center in map space (ties: lowest subspace id).
  if (user.map_pos) {
    int best = -1;
    double bestd = 0.0;
    for (std::size_t s = 0; s < seg->subspaces.size(); ++s) {
      double d = distance(*user.map_pos, seg->subspaces[s].center);
      if (best < 0 || d < bestd) {
        best = static_cast<int>(s);
        bestd = d;
      }
    }
    return seg->subspaces[best].devices;
  }
  all.reserve(devices.size());
  for (const auto& d : devices) all.push_back(d.id);
  return all;
}

// Greedy minimum-metric placement over the pool. Only reachable devices with
// a free slot are feasible; ties prefer more free slots, then the lower id.
// A successful placement consumes one slot.
inline PlacementDecision place_task(const EndUser& user, const std::vector<DeviceId>& pool,
                                    const LatencyMatrix& matrix, std::vector<EdgeDevice>& devices,
                                    PlacementMetric metric, double ceiling_ms) {
  PlacementDecision out;
  int best = -1;
  double best_metric = 0.0;
  for (DeviceId id : pool) {
    const EdgeDevice& dev = devices[id];
    if (dev.vm_slots_free <= 0) continue;
    double lat = matrix.ud(user.id, id);
    if (lat >= ceiling_ms) continue;
    ++out.candidate_count;
    double m = metric == PlacementMetric::MeasuredLatency ? lat : distance(user.physical_pos, dev.physical_pos);
    if (best < 0 || m < best_metric ||
        (m == best_metric && (dev.vm_slots_free > devices[best].vm_slots_free ||
                              (dev.vm_slots_free == devices[best].vm_slots_free &&
                               id < static_cast<DeviceId>(best))))) {
      best = static_cast<int>(id);
      best_metric = m;
    }
  }
  if (best < 0) return out;
  --devices[best].vm_slots_free;
  out.device = static_cast<DeviceId>(best);
  out.outcome = PlacementOutcome::PlacedEdge;
  out.est_latency_ms = matrix.ud(user.id, best);
  return out;
}

// Returns one slot to the device; misuse (no placement, or a second release
// of the same task) is a caller bug surfaced as DoubleRelease.
inline void release_slot(Task& task, std::vector<EdgeDevice>& devices) {
  if (!task.assigned_device) throw DoubleRelease("release of a task that was never placed");
  if (task.released) throw DoubleRelease("second release of task");
  EdgeDevice& dev = devices[*task.assigned_device];
  ++dev.vm_slots_free;
  task.released = true;
}

// A partitioned task fails when its owner leaves the placement-time padded
// boundary (or loses localization). Tasks placed without a subspace --
// monolithic policy or nomad users -- fail only when the measured latency to
// the serving device reaches the unreachable ceiling.
inline bool check_mobility_failure(const std::optional<SubspaceSnapshot>& snapshot,
                                   const std::optional<Vec2>& user_map_pos,
                                   double current_latency_ms, double ceiling_ms) {
  if (snapshot) {
    if (!user_map_pos) return true;
    return distance(*user_map_pos, snapshot->center) > snapshot->boundary;
  }
  return current_latency_ms >= ceiling_ms;
}

}  // namespace edgeseg
