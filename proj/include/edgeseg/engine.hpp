#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "edgeseg/errors.hpp"
#include "edgeseg/latency.hpp"
#include "edgeseg/localization.hpp"
#include "edgeseg/metrics.hpp"
#include "edgeseg/mobility.hpp"
#include "edgeseg/model.hpp"
#include "edgeseg/orchestration.hpp"
#include "edgeseg/rng.hpp"
#include "edgeseg/segmentation.hpp"

namespace edgeseg {

struct SimClock {
  double now_s = 0.0;
  double tick_s = 1.0;
};

// Round-trip latency for request and response plus payload transfer time.
inline double task_delay_ms(double latency_ms, double payload_kb, double bandwidth_kbps) {
  return 2.0 * latency_ms + payload_kb / bandwidth_kbps * 1000.0;
}

// Per-user generator: Poisson arrivals on the user's accumulated *active*
// time, with a per-user phase offset of the active/idle cycle.
struct TaskGenState {
  Rng stream{0};
  double phase_offset_s = 0.0;
  double next_arrival_active_s = 0.0;
  double active_time_cum_s = 0.0;
};

// Active-time overlap of [t0, t1) with the cycle of the given phase; the
// cycle is active on [k*period - offset, k*period - offset + active_s).
inline double active_overlap(double t0, double t1, double offset_s, double active_s,
                             double period_s) {
  double s0 = t0 + offset_s;
  double s1 = t1 + offset_s;
  double total = 0.0;
  for (double k = std::floor(s0 / period_s); k * period_s < s1; k += 1.0) {
    double lo = std::max(s0, k * period_s);
    double hi = std::min(s1, k * period_s + active_s);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

struct RunningTask {
  Task task;
  std::optional<SubspaceSnapshot> snapshot;  // placement-time subspace geometry
};

struct World {
  ExperimentConfig cfg;
  std::vector<ServiceProfile> catalog;
  std::uint64_t seed = 0;

  std::vector<EndUser> users;
  std::vector<EdgeDevice> devices;
  std::vector<MobilityState> mobility;
  std::vector<Rng> mobility_streams;
  std::vector<TaskGenState> taskgen;

  LatencyMatrix matrix;
  std::optional<LatencyMap> map;
  std::optional<Segmentation> seg;

  SimClock clock;
  std::uint64_t tick_index = 0;
  TaskId next_task_id = 0;
  TaskLedger ledger;
  std::vector<RunningTask> running;

  // Metric accumulators.
  std::vector<double> delays_post_warmup;
  std::uint64_t gen_post = 0, comp_post = 0, fm_post = 0, fc_post = 0;
  std::vector<double> churn_series_pct;
  std::vector<double> nomad_series;
  std::uint32_t resegmentations = 0;
};

namespace eng_detail {

template <std::size_t N>
inline int draw_categorical(Rng& rng, const std::array<double, N>& shares) {
  double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    cum += shares[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(N) - 1;
}

inline int draw_service(Rng& rng, const std::vector<ServiceProfile>& catalog) {
  double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    cum += catalog[i].usage_share;
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(catalog.size()) - 1;
}

inline MobilityLayers make_layers(const World& w) {
  if (w.cfg.policy == Policy::SingleLayer) {
    // One undifferentiated layer: every localized user goes through the
    // k-means path regardless of speed.
    MobilityLayers layers;
    for (const auto& u : w.users)
      if (u.map_pos) layers.low.push_back(u.id);
    return layers;
  }
  return segregate(w.users, w.cfg.speed_threshold_mps);
}

inline void sync_subspaces(World& w) {
  for (auto& u : w.users) u.subspace.reset();
  if (!w.seg) return;
  for (const auto& s : w.seg->subspaces)
    for (UserId id : s.members) w.users[id].subspace = s.id;
}

}  // namespace eng_detail

inline World init_world(const ExperimentConfig& cfg, std::uint64_t seed) {
  World w;
  w.cfg = cfg;
  w.catalog = catalog_or_default(cfg);
  w.seed = seed;
  w.clock.tick_s = cfg.tick_s;
  const Area area = cfg.area();

  Rng dev_rng(substream_seed(seed, "devices"));
  w.devices.resize(cfg.n_devices);
  for (int d = 0; d < cfg.n_devices; ++d) {
    EdgeDevice& dev = w.devices[d];
    dev.id = static_cast<DeviceId>(d);
    dev.physical_pos = Vec2{dev_rng.uniform(0.0, area.width), dev_rng.uniform(0.0, area.height)};
    dev.comm_tech = static_cast<CommTech>(eng_detail::draw_categorical(dev_rng, cfg.devices.tech_shares));
    dev.vm_slots_total = cfg.devices.vm_slots_total;
    dev.vm_slots_free = dev.vm_slots_total;
    dev.vm_mips = cfg.devices.vm_mips;
  }

  w.users.resize(cfg.n_users);
  w.mobility.resize(cfg.n_users);
  w.mobility_streams.reserve(cfg.n_users);
  w.taskgen.resize(cfg.n_users);
  for (int i = 0; i < cfg.n_users; ++i) {
    Rng rng(substream_seed(seed, "user", static_cast<std::uint64_t>(i)));
    EndUser& u = w.users[i];
    u.id = static_cast<UserId>(i);
    u.physical_pos = Vec2{rng.uniform(0.0, area.width), rng.uniform(0.0, area.height)};
    bool vehicle = rng.uniform() < cfg.users.high_mobility_share;
    u.speed_mps = vehicle ? rng.uniform(cfg.users.vehicle_speed_min_mps,
                                        cfg.users.vehicle_speed_max_mps)
                          : rng.uniform(cfg.users.pedestrian_speed_min_mps,
                                        cfg.users.pedestrian_speed_max_mps);
    u.mobility_class = u.speed_mps > cfg.speed_threshold_mps ? MobilityClass::HighMobility
                                                             : MobilityClass::LowMobility;
    u.comm_tech = static_cast<CommTech>(eng_detail::draw_categorical(rng, cfg.users.tech_shares));
    u.service = static_cast<ServiceTypeId>(eng_detail::draw_service(rng, w.catalog));

    MobilityState& st = w.mobility[i];
    st.vehicle = vehicle;
    st.heading_rad = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    st.waypoint = Vec2{rng.uniform(0.0, area.width), rng.uniform(0.0, area.height)};
    u.heading_rad = st.heading_rad;
    w.mobility_streams.emplace_back(substream_seed(seed, "mob", static_cast<std::uint64_t>(i)));

    const ServiceProfile& prof = w.catalog[static_cast<int>(u.service)];
    TaskGenState& gen = w.taskgen[i];
    gen.stream = Rng(substream_seed(seed, "tasks", static_cast<std::uint64_t>(i)));
    gen.phase_offset_s = gen.stream.uniform(0.0, prof.active_period_s + prof.idle_period_s);
    gen.next_arrival_active_s = gen.stream.exponential(prof.mean_interarrival_s);
  }
  return w;
}

// One simulation step. Stage order is fixed: movement, latency measurement,
// localization, segmentation upkeep, mobility-failure checks, completions,
// then generation and placement; the ledger must balance at the end.
inline void tick(World& w) {
  const double now = w.clock.now_s;
  const double dt = w.clock.tick_s;
  const double warmup = w.cfg.warmup_s;
  const Area area = w.cfg.area();
  const bool partitioned = w.cfg.policy != Policy::Monolithic;

  // 1. Movement.
  for (std::size_t i = 0; i < w.users.size(); ++i) {
    if (w.mobility[i].vehicle)
      step_vehicle(w.users[i], w.mobility[i], dt, area, w.cfg.users.heading_sigma_rad,
                   w.mobility_streams[i]);
    else
      step_pedestrian(w.users[i], w.mobility[i], now, dt, area, w.cfg.users.dwell_max_s,
                      w.mobility_streams[i]);
    w.users[i].heading_rad = w.mobility[i].heading_rad;
  }

  // 2. Fresh latency measurements.
  w.matrix = build_latency_matrix(w.users, w.devices, w.cfg.latency, w.seed, w.tick_index, now);

  // 3-4. Virtual localization and segmentation upkeep (partitioned policies).
  if (partitioned) {
    w.map = refresh_map(w.matrix, w.users, w.devices, w.map, w.cfg.latency, w.cfg.embedding,
                        w.cfg.placement, substream_seed(w.seed, "map"));
    for (std::size_t i = 0; i < w.users.size(); ++i) w.users[i].map_pos = w.map->user_coords[i];

    MobilityLayers layers = eng_detail::make_layers(w);
    SegmentationParams sp{w.cfg.kmeans, w.cfg.radial, w.cfg.clustering_mode, w.cfg.churn_threshold};
    std::vector<std::optional<Vec2>> coords(w.users.size());
    for (std::size_t i = 0; i < w.users.size(); ++i) coords[i] = w.users[i].map_pos;

    double churn = 0.0;
    if (!w.seg) {
      w.seg = build_segmentation(coords, layers, w.map->anchor_coords, w.map->device_ids, sp,
                                 substream_seed(w.seed, "seg"), now);
    } else {
      RefreshOutcome out = maybe_resegment(*w.seg, coords, layers, w.map->anchor_coords,
                                           w.map->device_ids, sp, substream_seed(w.seed, "seg"),
                                           now);
      churn = out.mean_churn;
      w.seg = std::move(out.seg);
      if (out.resegmented) ++w.resegmentations;
    }
    eng_detail::sync_subspaces(w);
    w.churn_series_pct.push_back(100.0 * churn);
    w.nomad_series.push_back(static_cast<double>(w.seg->nomads.size()) /
                             static_cast<double>(w.users.size()));
  } else {
    w.churn_series_pct.push_back(0.0);
    w.nomad_series.push_back(0.0);
  }

  // 5-6. Mobility-failure checks, then completions, in creation order.
  std::vector<RunningTask> kept;
  kept.reserve(w.running.size());
  for (auto& rec : w.running) {
    Task& t = rec.task;
    double lat = w.matrix.ud(static_cast<int>(t.owner), static_cast<int>(*t.assigned_device));
    if (check_mobility_failure(rec.snapshot, w.users[t.owner].map_pos, lat,
                               w.cfg.latency.ceiling_ms)) {
      release_slot(t, w.devices);
      t.state = TaskState::FailedMobility;
      --w.ledger.in_flight;
      ++w.ledger.failed_mobility;
      if (now >= warmup) ++w.fm_post;
      continue;
    }
    if (t.finish_at <= now + 1e-9) {
      release_slot(t, w.devices);
      t.state = TaskState::Completed;
      --w.ledger.in_flight;
      ++w.ledger.completed;
      if (now >= warmup) {
        ++w.comp_post;
        w.delays_post_warmup.push_back(t.delay_ms);
      }
      continue;
    }
    kept.push_back(std::move(rec));
  }
  w.running = std::move(kept);

  // 7. Generation and placement, users in id order.
  const PlacementMetric metric =
      partitioned ? PlacementMetric::MeasuredLatency : w.cfg.monolithic_placement;
  const Segmentation* seg_ptr = w.seg ? &*w.seg : nullptr;
  for (std::size_t i = 0; i < w.users.size(); ++i) {
    EndUser& user = w.users[i];
    const ServiceProfile& prof = w.catalog[static_cast<int>(user.service)];
    TaskGenState& gen = w.taskgen[i];
    const double period = prof.active_period_s + prof.idle_period_s;
    double d_active = active_overlap(now, now + dt, gen.phase_offset_s, prof.active_period_s,
                                     period);
    int n_new = 0;
    const double horizon = gen.active_time_cum_s + d_active;
    while (gen.next_arrival_active_s <= horizon) {
      ++n_new;
      gen.next_arrival_active_s += gen.stream.exponential(prof.mean_interarrival_s);
    }
    gen.active_time_cum_s = horizon;

    for (int t = 0; t < n_new; ++t) {
      bool to_cloud = gen.stream.uniform() < prof.cloud_offload_prob;
      if (to_cloud) {
        ++w.ledger.offloaded_cloud;
        continue;
      }
      ++w.ledger.generated;
      if (now >= warmup) ++w.gen_post;

      Task task;
      task.id = w.next_task_id++;
      task.owner = user.id;
      task.service = user.service;
      task.created_at = now;
      task.length_mi = prof.task_length_mi;
      task.upload_kb = prof.upload_kb;
      task.download_kb = prof.download_kb;
      task.required_cores = prof.required_cores;

      std::vector<DeviceId> pool = candidate_pool(user, seg_ptr, w.devices, w.cfg.policy);
      PlacementDecision dec =
          place_task(user, pool, w.matrix, w.devices, metric, w.cfg.latency.ceiling_ms);
      if (dec.outcome == PlacementOutcome::PlacedEdge) {
        task.state = TaskState::Running;
        task.assigned_device = dec.device;
        task.delay_ms =
            task_delay_ms(dec.est_latency_ms, prof.upload_kb + prof.download_kb,
                          w.cfg.bandwidth_kbps);
        // One slot per task; core demand stretches the service time instead.
        double service_s =
            prof.task_length_mi / w.devices[*dec.device].vm_mips * prof.required_cores;
        task.finish_at = now + service_s + task.delay_ms / 1000.0;
        ++w.ledger.in_flight;

        RunningTask rec;
        rec.task = task;
        if (partitioned && user.subspace && w.seg) {
          const Subspace& s = w.seg->subspaces[*user.subspace];
          rec.snapshot = SubspaceSnapshot{s.center, s.boundary()};
        }
        w.running.push_back(std::move(rec));
      } else {
        task.state = TaskState::FailedCapacity;
        ++w.ledger.failed_capacity;
        if (now >= warmup) ++w.fc_post;
      }
    }
  }

  if (!w.ledger.conserved())
    throw SimulationError("task ledger out of balance at t=" + std::to_string(now));

  w.clock.now_s += dt;
  ++w.tick_index;
}

inline MetricsReport finalize_report(const World& w) {
  MetricsReport r;
  r.ledger = w.ledger;
  r.generated = w.gen_post;
  r.completed = w.comp_post;
  r.failed_mobility = w.fm_post;
  r.failed_capacity = w.fc_post;
  r.no_events = w.gen_post == 0;
  if (w.gen_post > 0) {
    r.failure_rate_mobility = static_cast<double>(w.fm_post) / static_cast<double>(w.gen_post);
    r.failure_rate_capacity = static_cast<double>(w.fc_post) / static_cast<double>(w.gen_post);
  }
  r.mean_network_delay_ms = mean_of(w.delays_post_warmup);
  r.p50_network_delay_ms = percentile_of(w.delays_post_warmup, 0.50);
  r.p95_network_delay_ms = percentile_of(w.delays_post_warmup, 0.95);

  std::vector<double> churn_post, nomad_post;
  for (std::size_t t = 0; t < w.churn_series_pct.size(); ++t) {
    if (static_cast<double>(t) * w.cfg.tick_s >= w.cfg.warmup_s) {
      churn_post.push_back(w.churn_series_pct[t]);
      nomad_post.push_back(w.nomad_series[t]);
    }
  }
  r.mean_churn_pct = mean_of(churn_post);
  r.mean_nomad_fraction = mean_of(nomad_post);
  r.resegmentations = w.resegmentations;
  r.stress_final = w.map ? w.map->stress_value : 0.0;
  r.n_subspaces_final = w.seg ? static_cast<int>(w.seg->subspaces.size()) : 0;
  r.churn_series_pct = w.churn_series_pct;
  r.nomad_series = w.nomad_series;
  return r;
}

// Full run: validates, simulates sim_duration_s / tick_s steps, and reports.
// Failures inside the tick pipeline surface as SimulationError.
inline MetricsReport run(const ExperimentConfig& cfg) {
  validate_config(cfg);
  auto t0 = std::chrono::steady_clock::now();
  World w = init_world(cfg, cfg.rng_seed);
  const auto n_ticks = static_cast<std::uint64_t>(std::llround(cfg.sim_duration_s / cfg.tick_s));
  try {
    for (std::uint64_t t = 0; t < n_ticks; ++t) tick(w);
  } catch (const SimulationError&) {
    throw;
  } catch (const std::exception& e) {
    throw SimulationError(std::string("tick ") + std::to_string(w.tick_index) + ": " + e.what());
  }
  MetricsReport r = finalize_report(w);
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace edgeseg
