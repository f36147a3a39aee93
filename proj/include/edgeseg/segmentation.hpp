#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "edgeseg/errors.hpp"
#include "edgeseg/geometry.hpp"
#include "edgeseg/model.hpp"
#include "edgeseg/rng.hpp"

namespace edgeseg {

// Low/high mobility membership; covers exactly the localized users.
struct MobilityLayers {
  std::vector<UserId> low;
  std::vector<UserId> high;
};

// One cluster in latency-map space with its member users and attached
// (shared) edge devices. Member rosters are kept sorted by user id.
struct Subspace {
  SubspaceId id = 0;
  MobilityClass layer = MobilityClass::LowMobility;
  Vec2 center;
  double radius = 0.0;
  double padding_fraction = 0.0;
  std::vector<UserId> members;
  std::vector<DeviceId> devices;
  std::vector<UserId> roster_at_creation;
  double created_at = 0.0;

  double boundary() const { return radius * (1.0 + padding_fraction); }
  bool contains(const Vec2& p) const { return distance(p, center) <= boundary(); }
};

struct Segmentation {
  std::vector<Subspace> subspaces;
  std::vector<UserId> nomads;  // sorted; users in no subspace
  double created_at = 0.0;
};

struct ClusterPoint {
  UserId id = 0;
  Vec2 pos;
};

struct Cluster {
  Vec2 center;
  double radius = 0.0;
  std::vector<UserId> members;
};

struct Clustering {
  std::vector<Cluster> clusters;
  std::vector<UserId> nomads;
};

struct KmeansResult {
  Clustering clustering;
  double wcss = 0.0;               // final within-cluster sum of squares, before outlier removal
  std::vector<double> wcss_trace;  // recorded after each assignment step, winning restart
};

struct SegmentationParams {
  KmeansParams kmeans;
  RadialParams radial;
  ClusteringMode mode = ClusteringMode::Lax;
  double churn_threshold = 0.3;
};

// Mobility poll: high iff speed strictly above the threshold. Only localized
// users enter the layers; the rest are handled as nomads downstream.
inline MobilityLayers segregate(const std::vector<EndUser>& users, double speed_threshold_mps) {
  MobilityLayers layers;
  for (const auto& u : users) {
    if (!u.map_pos) continue;
    if (u.speed_mps > speed_threshold_mps)
      layers.high.push_back(u.id);
    else
      layers.low.push_back(u.id);
  }
  return layers;
}

// k = max(1, round-half-up(n / target)); never exceeds n for n >= 1.
inline int select_k(int n_points, int target_cluster_size) {
  if (n_points <= 0) return 1;
  int k = static_cast<int>(static_cast<double>(n_points) / target_cluster_size + 0.5);
  return std::max(1, k);
}

namespace seg_detail {

inline double wcss_of(const std::vector<ClusterPoint>& pts, const std::vector<Vec2>& centers,
                      const std::vector<int>& assign) {
  double f = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) f += distance2(pts[i].pos, centers[assign[i]]);
  return f;
}

// Seeded k-means++ initialization.
inline std::vector<Vec2> kmeanspp_init(const std::vector<ClusterPoint>& pts, int k, Rng& rng) {
  const std::size_t n = pts.size();
  std::vector<Vec2> centers;
  centers.reserve(k);
  centers.push_back(pts[rng.uniform_index(n)].pos);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = distance2(pts[i].pos, centers[0]);
      for (std::size_t c = 1; c < centers.size(); ++c)
        best = std::min(best, distance2(pts[i].pos, centers[c]));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centers.push_back(pts[rng.uniform_index(n)].pos);
      continue;
    }
    double target = rng.uniform() * total;
    double cum = 0.0;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      cum += d2[i];
      if (cum >= target) {
        pick = i;
        break;
      }
    }
    centers.push_back(pts[pick].pos);
  }
  return centers;
}

// Lloyd iteration to an assignment fixpoint. Assignment ties break toward
// the lowest center index; empty clusters keep their previous center.
inline double lloyd(const std::vector<ClusterPoint>& pts, std::vector<Vec2>& centers,
                    std::vector<int>& assign, int max_iter, std::vector<double>& trace) {
  const std::size_t n = pts.size();
  const int k = static_cast<int>(centers.size());
  assign.assign(n, 0);
  double f = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bestd = distance2(pts[i].pos, centers[0]);
      for (int c = 1; c < k; ++c) {
        double d = distance2(pts[i].pos, centers[c]);
        if (d < bestd) {
          bestd = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
      f += bestd;
    }
    trace.push_back(f);
    if (!changed && it > 0) break;

    std::vector<Vec2> sums(k, Vec2{0.0, 0.0});
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[assign[i]] += pts[i].pos;
      ++counts[assign[i]];
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centers[c] = sums[c] / counts[c];
  }
  return wcss_of(pts, centers, assign);
}

// Exhaustive optimum over every point labeling; only for instances where
// k^n is small enough to scan. Returns false when the space is too large.
inline bool exact_search(const std::vector<ClusterPoint>& pts, int k, std::vector<int>& best,
                         double& best_f) {
  constexpr std::uint64_t kMaxLabelings = 20000;
  const std::size_t n = pts.size();
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    total *= static_cast<std::uint64_t>(k);
    if (total > kMaxLabelings) return false;
  }
  std::vector<int> lab(n, 0);
  std::vector<Vec2> sums(k, Vec2{0.0, 0.0});
  std::vector<int> counts(k, 0);
  best_f = -1.0;
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t rest = code;
    for (std::size_t i = 0; i < n; ++i) {
      lab[i] = static_cast<int>(rest % k);
      rest /= k;
    }
    std::fill(sums.begin(), sums.end(), Vec2{0.0, 0.0});
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[lab[i]] += pts[i].pos;
      ++counts[lab[i]];
    }
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) f += distance2(pts[i].pos, sums[lab[i]] / counts[lab[i]]);
    if (best_f < 0.0 || f < best_f) {
      best_f = f;
      best = lab;
    }
  }
  return true;
}

}  // namespace seg_detail

// Lax k-means: restarted seeded k-means++ plus Lloyd to a fixpoint, then a
// single outlier pass that moves every point farther than outlier_radius
// from its centroid out to the nomad set. Centroids are not recomputed after
// removal; a cluster's radius is the largest remaining member distance.
inline KmeansResult kmeans_lax(const std::vector<ClusterPoint>& points, int k,
                               double outlier_radius, std::uint64_t seed, int max_iter = 50,
                               int n_init = 10) {
  if (points.empty()) throw EmptyInput("kmeans_lax: no points");
  const std::size_t n = points.size();
  k = std::clamp(k, 1, static_cast<int>(n));

  std::vector<Vec2> best_centers;
  std::vector<int> best_assign;
  double best_f = -1.0;
  std::vector<double> best_trace;
  std::vector<Vec2> centers;
  std::vector<int> assign;
  std::vector<double> trace;
  for (int r = 0; r < n_init; ++r) {
    Rng rng(substream_seed(seed, "kmeans.init", static_cast<std::uint64_t>(r)));
    centers = seg_detail::kmeanspp_init(points, k, rng);
    trace.clear();
    double f = seg_detail::lloyd(points, centers, assign, max_iter, trace);
    if (best_f < 0.0 || f < best_f) {
      best_f = f;
      best_centers = centers;
      best_assign = assign;
      best_trace = trace;
    }
  }

  // A handful of points can trap every seeded restart in the same local
  // optimum. When the labeling space is small enough to scan, recover the
  // exact optimum, keeping it only when strictly better so that already
  // optimal runs come out untouched.
  if (k >= 2) {
    std::vector<int> opt;
    double opt_f = 0.0;
    if (seg_detail::exact_search(points, k, opt, opt_f) && opt_f < best_f * (1.0 - 1e-9)) {
      std::vector<Vec2> sums(k, Vec2{0.0, 0.0});
      std::vector<int> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        sums[opt[i]] += points[i].pos;
        ++counts[opt[i]];
      }
      centers.clear();
      for (int c = 0; c < k; ++c)
        if (counts[c] > 0) centers.push_back(sums[c] / counts[c]);
      trace.clear();
      double f = seg_detail::lloyd(points, centers, assign, max_iter, trace);
      if (f < best_f) {
        best_f = f;
        best_centers = centers;
        best_assign = assign;
        best_trace = trace;
      }
    }
  }

  KmeansResult out;
  out.wcss = best_f;
  out.wcss_trace = std::move(best_trace);

  std::vector<std::vector<UserId>> members(best_centers.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (distance(points[i].pos, best_centers[best_assign[i]]) > outlier_radius)
      out.clustering.nomads.push_back(points[i].id);
    else
      members[best_assign[i]].push_back(points[i].id);
  }
  for (std::size_t c = 0; c < best_centers.size(); ++c) {
    if (members[c].empty()) continue;
    Cluster cl;
    cl.center = best_centers[c];
    cl.members = std::move(members[c]);
    std::sort(cl.members.begin(), cl.members.end());
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (best_assign[i] == static_cast<int>(c) &&
          std::binary_search(cl.members.begin(), cl.members.end(), points[i].id))
        r = std::max(r, distance(points[i].pos, cl.center));
    cl.radius = r;
    out.clustering.clusters.push_back(std::move(cl));
  }
  std::sort(out.clustering.nomads.begin(), out.clustering.nomads.end());
  return out;
}

// Greedy densest-first radial clustering. Repeatedly picks the unclaimed
// point with the most unclaimed neighbors within `radius` (ties: lowest user
// id), claims that neighborhood as a cluster centered at the point, and
// stops once the best candidate would have fewer than min_members members.
inline Clustering radial_cluster(const std::vector<ClusterPoint>& points, double radius,
                                 double /*padding_fraction*/, int min_members) {
  Clustering out;
  const std::size_t n = points.size();
  std::vector<char> claimed(n, 0);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return points[a].id < points[b].id; });

  while (true) {
    int best_count = -1;
    std::size_t best = 0;
    for (std::size_t oi : order) {
      if (claimed[oi]) continue;
      int count = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (!claimed[j] && distance(points[oi].pos, points[j].pos) <= radius) ++count;
      if (count > best_count) {
        best_count = count;
        best = oi;
      }
    }
    if (best_count < min_members) break;

    Cluster cl;
    cl.center = points[best].pos;
    cl.radius = radius;
    for (std::size_t j = 0; j < n; ++j) {
      if (!claimed[j] && distance(cl.center, points[j].pos) <= radius) {
        claimed[j] = 1;
        cl.members.push_back(points[j].id);
      }
    }
    std::sort(cl.members.begin(), cl.members.end());
    out.clusters.push_back(std::move(cl));
  }

  for (std::size_t i = 0; i < n; ++i)
    if (!claimed[i]) out.nomads.push_back(points[i].id);
  std::sort(out.nomads.begin(), out.nomads.end());
  return out;
}

// Shares every anchor within the padded boundary; a cluster that would end
// up with no devices receives its single nearest anchor instead.
inline void attach_devices(std::vector<Subspace>& subspaces, const std::vector<Vec2>& anchor_coords,
                           const std::vector<DeviceId>& device_ids) {
  for (auto& s : subspaces) {
    s.devices.clear();
    for (std::size_t d = 0; d < anchor_coords.size(); ++d)
      if (distance(anchor_coords[d], s.center) <= s.boundary()) s.devices.push_back(device_ids[d]);
    if (s.devices.empty() && !anchor_coords.empty()) {
      std::size_t nearest = 0;
      double bestd = distance(anchor_coords[0], s.center);
      for (std::size_t d = 1; d < anchor_coords.size(); ++d) {
        double dd = distance(anchor_coords[d], s.center);
        if (dd < bestd) {
          bestd = dd;
          nearest = d;
        }
      }
      s.devices.push_back(device_ids[nearest]);
    }
    std::sort(s.devices.begin(), s.devices.end());
  }
}

// Nearest-center assignment over the given centers; ties break toward the
// lower index. The strict baseline leaves no point unassigned.
inline std::vector<int> strict_assign(const std::vector<ClusterPoint>& points,
                                      const std::vector<Vec2>& centers) {
  std::vector<int> assign(points.size(), -1);
  if (centers.empty()) return assign;
  for (std::size_t i = 0; i < points.size(); ++i) {
    int best = 0;
    double bestd = distance(points[i].pos, centers[0]);
    for (std::size_t c = 1; c < centers.size(); ++c) {
      double d = distance(points[i].pos, centers[c]);
      if (d < bestd) {
        bestd = d;
        best = static_cast<int>(c);
      }
    }
    assign[i] = best;
  }
  return assign;
}

// Churn fraction: (lost + added) / creation-roster size. Not clamped; the
// degradation percentage reported upstream is 100x this value.
inline double cluster_health(const std::vector<UserId>& roster_at_creation,
                             const std::vector<UserId>& current_members) {
  if (roster_at_creation.empty()) throw EmptyRoster("cluster_health: empty creation roster");
  std::size_t common = 0;
  std::size_t i = 0, j = 0;
  while (i < roster_at_creation.size() && j < current_members.size()) {
    if (roster_at_creation[i] == current_members[j]) {
      ++common;
      ++i;
      ++j;
    } else if (roster_at_creation[i] < current_members[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  std::size_t lost = roster_at_creation.size() - common;
  std::size_t added = current_members.size() - common;
  return static_cast<double>(lost + added) / static_cast<double>(roster_at_creation.size());
}

namespace seg_detail {

inline std::vector<ClusterPoint> layer_points(const std::vector<UserId>& ids,
                                              const std::vector<std::optional<Vec2>>& user_coords) {
  std::vector<ClusterPoint> pts;
  pts.reserve(ids.size());
  for (UserId id : ids) pts.push_back(ClusterPoint{id, *user_coords[id]});
  return pts;
}

inline void append_subspaces(std::vector<Subspace>& out, const Clustering& cl, MobilityClass layer,
                             double padding_fraction, double now) {
  for (const auto& c : cl.clusters) {
    Subspace s;
    s.id = static_cast<SubspaceId>(out.size());
    s.layer = layer;
    s.center = c.center;
    s.radius = c.radius;
    s.padding_fraction = padding_fraction;
    s.members = c.members;
    s.roster_at_creation = c.members;
    s.created_at = now;
    out.push_back(std::move(s));
  }
}

}  // namespace seg_detail

// Builds a fresh segmentation: the low-mobility layer is clustered with lax
// k-means, the high-mobility layer with padded radial clustering, devices are
// shared into every overlapping subspace, and leftover users become nomads.
// Strict mode then force-assigns each layer's nomads to the nearest center.
inline Segmentation build_segmentation(const std::vector<std::optional<Vec2>>& user_coords,
                                       const MobilityLayers& layers,
                                       const std::vector<Vec2>& anchor_coords,
                                       const std::vector<DeviceId>& device_ids,
                                       const SegmentationParams& params, std::uint64_t seed,
                                       double now) {
  Segmentation seg;
  seg.created_at = now;
  std::vector<UserId> lax_nomads;

  if (!layers.low.empty()) {
    auto pts = seg_detail::layer_points(layers.low, user_coords);
    int k = select_k(static_cast<int>(pts.size()), params.kmeans.target_cluster_size);
    KmeansResult km = kmeans_lax(pts, k, params.kmeans.outlier_radius,
                                 substream_seed(seed, "seg.kmeans"), params.kmeans.max_iter,
                                 params.kmeans.n_init);
    seg_detail::append_subspaces(seg.subspaces, km.clustering, MobilityClass::LowMobility,
                                 params.kmeans.padding_fraction, now);
    lax_nomads.insert(lax_nomads.end(), km.clustering.nomads.begin(), km.clustering.nomads.end());
  }
  if (!layers.high.empty()) {
    auto pts = seg_detail::layer_points(layers.high, user_coords);
    Clustering rc = radial_cluster(pts, params.radial.radius, params.radial.padding_fraction,
                                   params.radial.min_members);
    seg_detail::append_subspaces(seg.subspaces, rc, MobilityClass::HighMobility,
                                 params.radial.padding_fraction, now);
    lax_nomads.insert(lax_nomads.end(), rc.nomads.begin(), rc.nomads.end());
  }

  if (params.mode == ClusteringMode::Strict) {
    // Full segmentation: layer nomads join the nearest same-layer center.
    for (MobilityClass layer : {MobilityClass::LowMobility, MobilityClass::HighMobility}) {
      std::vector<std::size_t> layer_subspaces;
      std::vector<Vec2> centers;
      for (std::size_t s = 0; s < seg.subspaces.size(); ++s)
        if (seg.subspaces[s].layer == layer) {
          layer_subspaces.push_back(s);
          centers.push_back(seg.subspaces[s].center);
        }
      if (centers.empty()) continue;
      std::vector<UserId> kept;
      for (UserId id : lax_nomads) {
        const auto& ids = layer == MobilityClass::LowMobility ? layers.low : layers.high;
        if (!std::binary_search(ids.begin(), ids.end(), id)) {
          kept.push_back(id);
          continue;
        }
        std::vector<ClusterPoint> one{{id, *user_coords[id]}};
        int c = strict_assign(one, centers)[0];
        auto& target = seg.subspaces[layer_subspaces[c]];
        target.members.push_back(id);
        target.roster_at_creation.push_back(id);
      }
      lax_nomads = std::move(kept);
    }
    for (auto& s : seg.subspaces) {
      std::sort(s.members.begin(), s.members.end());
      s.roster_at_creation = s.members;
    }
  }

  attach_devices(seg.subspaces, anchor_coords, device_ids);

  seg.nomads = std::move(lax_nomads);
  for (UserId id = 0; id < user_coords.size(); ++id)
    if (!user_coords[id]) seg.nomads.push_back(id);
  std::sort(seg.nomads.begin(), seg.nomads.end());
  return seg;
}

namespace seg_detail {

// Lax refresh: members stay while inside their padded boundary; detached
// users join the nearest same-layer subspace whose boundary contains them.
// Strict refresh: plain nearest-center reassignment within each layer.
inline Segmentation refresh_membership(const Segmentation& seg,
                                       const std::vector<std::optional<Vec2>>& user_coords,
                                       const MobilityLayers& layers, ClusteringMode mode) {
  Segmentation out = seg;
  const std::size_t n_users = user_coords.size();

  std::vector<char> layer_of(n_users, -1);  // 0 low, 1 high, -1 unlocalized
  for (UserId id : layers.low) layer_of[id] = 0;
  for (UserId id : layers.high) layer_of[id] = 1;

  std::vector<int> current(n_users, -1);
  if (mode == ClusteringMode::Lax) {
    for (std::size_t s = 0; s < out.subspaces.size(); ++s) {
      char want = out.subspaces[s].layer == MobilityClass::LowMobility ? 0 : 1;
      for (UserId id : out.subspaces[s].members) {
        if (layer_of[id] == want && user_coords[id] && out.subspaces[s].contains(*user_coords[id]))
          current[id] = static_cast<int>(s);
      }
    }
    for (UserId id = 0; id < n_users; ++id) {
      if (current[id] >= 0 || layer_of[id] < 0) continue;
      MobilityClass want =
          layer_of[id] == 0 ? MobilityClass::LowMobility : MobilityClass::HighMobility;
      int best = -1;
      double bestd = 0.0;
      for (std::size_t s = 0; s < out.subspaces.size(); ++s) {
        const auto& sub = out.subspaces[s];
        if (sub.layer != want || !sub.contains(*user_coords[id])) continue;
        double d = distance(*user_coords[id], sub.center);
        if (best < 0 || d < bestd) {
          best = static_cast<int>(s);
          bestd = d;
        }
      }
      current[id] = best;
    }
  } else {
    for (UserId id = 0; id < n_users; ++id) {
      if (layer_of[id] < 0) continue;
      MobilityClass want =
          layer_of[id] == 0 ? MobilityClass::LowMobility : MobilityClass::HighMobility;
      int best = -1;
      double bestd = 0.0;
      for (std::size_t s = 0; s < out.subspaces.size(); ++s) {
        const auto& sub = out.subspaces[s];
        if (sub.layer != want) continue;
        double d = distance(*user_coords[id], sub.center);
        if (best < 0 || d < bestd) {
          best = static_cast<int>(s);
          bestd = d;
        }
      }
      current[id] = best;
    }
  }

  for (auto& s : out.subspaces) s.members.clear();
  out.nomads.clear();
  for (UserId id = 0; id < n_users; ++id) {
    if (current[id] >= 0)
      out.subspaces[current[id]].members.push_back(id);
    else
      out.nomads.push_back(id);
  }
  return out;
}

}  // namespace seg_detail

struct RefreshOutcome {
  Segmentation seg;
  bool resegmented = false;
  double mean_churn = 0.0;  // fraction, measured after refresh, before any rebuild
};

// Membership refresh plus the re-segmentation gate: a rebuild triggers only
// when mean churn strictly exceeds the threshold, preventing continuous
// update cycles.
inline RefreshOutcome maybe_resegment(const Segmentation& seg,
                                      const std::vector<std::optional<Vec2>>& user_coords,
                                      const MobilityLayers& layers,
                                      const std::vector<Vec2>& anchor_coords,
                                      const std::vector<DeviceId>& device_ids,
                                      const SegmentationParams& params, std::uint64_t seed,
                                      double now) {
  RefreshOutcome out;
  out.seg = seg_detail::refresh_membership(seg, user_coords, layers, params.mode);

  double churn_sum = 0.0;
  for (const auto& s : out.seg.subspaces)
    churn_sum += cluster_health(s.roster_at_creation, s.members);
  out.mean_churn =
      out.seg.subspaces.empty() ? 0.0 : churn_sum / static_cast<double>(out.seg.subspaces.size());

  if (out.mean_churn > params.churn_threshold) {
    out.seg = build_segmentation(user_coords, layers, anchor_coords, device_ids, params, seed, now);
    out.resegmented = true;
  }
  return out;
}

}  // namespace edgeseg
