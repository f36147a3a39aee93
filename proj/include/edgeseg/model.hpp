#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgeseg/errors.hpp"
#include "edgeseg/geometry.hpp"

namespace edgeseg {

enum class CommTech : int { WiFi = 0, Cellular5G = 1, Bluetooth = 2 };
enum class MobilityClass : int { LowMobility = 0, HighMobility = 1 };
enum class ServiceTypeId : int { AR = 0, EHealth = 1, Gaming = 2, Infotainment = 3 };
enum class Policy : int { Monolithic = 0, SingleLayer = 1, DualLayer = 2 };
enum class ClusteringMode : int { Lax = 0, Strict = 1 };
enum class PlacementMetric : int { MeasuredLatency = 0, PhysicalDistance = 1 };

inline constexpr int kNumTechs = 3;
inline constexpr int kNumServices = 4;

inline const char* to_string(CommTech t) {
  switch (t) {
    case CommTech::WiFi: return "WiFi";
    case CommTech::Cellular5G: return "Cellular5G";
    case CommTech::Bluetooth: return "Bluetooth";
  }
  return "?";
}

inline const char* to_string(ServiceTypeId s) {
  switch (s) {
    case ServiceTypeId::AR: return "AR";
    case ServiceTypeId::EHealth: return "EHealth";
    case ServiceTypeId::Gaming: return "Gaming";
    case ServiceTypeId::Infotainment: return "Infotainment";
  }
  return "?";
}

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::Monolithic: return "Monolithic";
    case Policy::SingleLayer: return "SingleLayer";
    case Policy::DualLayer: return "DualLayer";
  }
  return "?";
}

inline const char* to_string(ClusteringMode m) {
  return m == ClusteringMode::Lax ? "Lax" : "Strict";
}

inline const char* to_string(PlacementMetric m) {
  return m == PlacementMetric::MeasuredLatency ? "MeasuredLatency" : "PhysicalDistance";
}

using UserId = std::uint32_t;
using DeviceId = std::uint32_t;
using SubspaceId = std::uint32_t;
using TaskId = std::uint64_t;

struct EndUser {
  UserId id = 0;
  Vec2 physical_pos;
  double speed_mps = 0.0;
  double heading_rad = 0.0;
  MobilityClass mobility_class = MobilityClass::LowMobility;
  CommTech comm_tech = CommTech::WiFi;
  ServiceTypeId service = ServiceTypeId::AR;
  std::optional<Vec2> map_pos;           // set by localization
  std::optional<SubspaceId> subspace;    // absent => nomadic
};

struct EdgeDevice {
  DeviceId id = 0;
  Vec2 physical_pos;
  int vm_slots_total = 0;
  int vm_slots_free = 0;
  double vm_mips = 0.0;  // per-slot processing rate
  CommTech comm_tech = CommTech::WiFi;
  Vec2 map_pos;  // anchor coordinate, fixed between re-embeddings
};

// One of the four service classes. 13 attributes: id plus 12 numeric fields.
struct ServiceProfile {
  ServiceTypeId id = ServiceTypeId::AR;
  double usage_share = 0.0;
  double active_period_s = 0.0;
  double idle_period_s = 0.0;
  double mean_interarrival_s = 0.0;
  double upload_kb = 0.0;
  double download_kb = 0.0;
  double task_length_mi = 0.0;
  int required_cores = 1;
  double vm_utilization_pct = 0.0;
  double delay_sensitivity = 0.0;   // in [0,1]
  double cloud_offload_prob = 0.0;  // in [0,1]
  double max_delay_ms = 0.0;        // deadline; informational for the delay metric
};

enum class TaskState : int {
  Pending = 0,
  Running = 1,
  Completed = 2,
  FailedMobility = 3,
  FailedCapacity = 4,
};

struct Task {
  TaskId id = 0;
  UserId owner = 0;
  ServiceTypeId service = ServiceTypeId::AR;
  double created_at = 0.0;
  double length_mi = 0.0;
  double upload_kb = 0.0;
  double download_kb = 0.0;
  int required_cores = 1;
  TaskState state = TaskState::Pending;
  std::optional<DeviceId> assigned_device;
  double finish_at = 0.0;   // assignment time + compute time + transfer delay
  double delay_ms = 0.0;    // end-to-end network delay charged to this task
  bool released = false;    // slot returned (guards double release)
};

struct KmeansParams {
  int target_cluster_size = 30;
  double outlier_radius = 20.0;  // map units (ms)
  int max_iter = 50;
  int n_init = 10;  // seeded restarts, best objective kept
  double padding_fraction = 0.0;
};

struct RadialParams {
  double radius = 6.0;  // map units (ms)
  double padding_fraction = 0.7;
  int min_members = 2;
};

struct LatencyModelParams {
  // Symmetric per-technology-pair base latency, indexed [tech][tech],
  // order: WiFi, Cellular5G, Bluetooth.
  std::array<std::array<double, kNumTechs>, kNumTechs> tech_base_ms = {{
      {{5.0, 12.0, 14.0}},
      {{12.0, 3.0, 15.0}},
      {{14.0, 15.0, 4.0}},
  }};
  double per_meter_ms = 0.02;
  double jitter_sd_ms = 0.6;
  double ceiling_ms = 1000.0;  // unreachable-pair value
  double bluetooth_range_m = 150.0;
};

struct EmbeddingParams {
  int max_iter = 500;
  double tol = 1e-10;
  int restarts = 8;
};

struct PlacementSolverParams {
  int cold_max_iter = 400;
  double cold_tol = 1e-10;
  int cold_restarts = 12;
  int warm_max_iter = 20;
  double warm_tol = 1e-7;
};

struct DeviceParams {
  int vm_slots_total = 4;
  double vm_mips = 4000.0;
  std::array<double, kNumTechs> tech_shares = {0.5, 0.4, 0.1};
};

struct UserParams {
  double high_mobility_share = 0.4;
  std::array<double, kNumTechs> tech_shares = {0.45, 0.45, 0.1};
  double pedestrian_speed_min_mps = 0.0;
  double pedestrian_speed_max_mps = 2.0;
  double vehicle_speed_min_mps = 18.0;
  double vehicle_speed_max_mps = 28.0;
  double heading_sigma_rad = 0.2;
  double dwell_max_s = 30.0;
};

struct ExperimentConfig {
  std::array<double, 2> area_m = {1000.0, 1000.0};
  int n_devices = 30;
  int n_users = 300;  // single-run population; the sweep overrides per cell
  std::vector<int> user_counts_sweep = {100, 200, 300, 400, 500, 600};
  int n_repetitions = 25;
  double sim_duration_s = 600.0;
  double warmup_s = 60.0;
  double tick_s = 1.0;
  std::uint64_t rng_seed = 42;
  double speed_threshold_mps = 3.0;
  Policy policy = Policy::DualLayer;
  ClusteringMode clustering_mode = ClusteringMode::Lax;
  // Placement metric for the Monolithic baseline. PhysicalDistance reproduces
  // the unsegmented scheme that places by geographic closeness; the
  // subspace policies always place by measured latency.
  PlacementMetric monolithic_placement = PlacementMetric::PhysicalDistance;
  KmeansParams kmeans;
  RadialParams radial;
  double churn_threshold = 0.3;
  LatencyModelParams latency;
  EmbeddingParams embedding;
  PlacementSolverParams placement;
  DeviceParams devices;
  UserParams users;
  double bandwidth_kbps = 10000.0;
  std::vector<ServiceProfile> services;  // empty => default catalog

  Area area() const { return Area{area_m[0], area_m[1]}; }
};

// The four-service catalog. The numeric constants are simulator defaults,
// overridable from the config file; see config/default.json.
inline std::vector<ServiceProfile> default_service_catalog() {
  std::vector<ServiceProfile> v(4);

  v[0].id = ServiceTypeId::AR;
  v[0].usage_share = 0.30;
  v[0].active_period_s = 40.0;
  v[0].idle_period_s = 20.0;
  v[0].mean_interarrival_s = 4.0;
  v[0].upload_kb = 150.0;
  v[0].download_kb = 25.0;
  v[0].task_length_mi = 5400.0;
  v[0].required_cores = 2;
  v[0].vm_utilization_pct = 6.0;
  v[0].delay_sensitivity = 0.9;
  v[0].cloud_offload_prob = 0.0;
  v[0].max_delay_ms = 30.0;  // tightest deadline of the four

  v[1].id = ServiceTypeId::EHealth;
  v[1].usage_share = 0.20;
  v[1].active_period_s = 45.0;
  v[1].idle_period_s = 90.0;
  v[1].mean_interarrival_s = 5.0;
  v[1].upload_kb = 20.0;
  v[1].download_kb = 50.0;
  v[1].task_length_mi = 4050.0;
  v[1].required_cores = 1;
  v[1].vm_utilization_pct = 2.0;
  v[1].delay_sensitivity = 0.7;
  v[1].cloud_offload_prob = 0.0;
  v[1].max_delay_ms = 60.0;

  v[2].id = ServiceTypeId::Gaming;
  v[2].usage_share = 0.25;
  v[2].active_period_s = 60.0;
  v[2].idle_period_s = 120.0;
  v[2].mean_interarrival_s = 4.0;
  v[2].upload_kb = 40.0;
  v[2].download_kb = 40.0;
  v[2].task_length_mi = 10800.0;  // CPU-heavy
  v[2].required_cores = 2;
  v[2].vm_utilization_pct = 8.0;
  v[2].delay_sensitivity = 0.8;
  v[2].cloud_offload_prob = 0.0;
  v[2].max_delay_ms = 40.0;

  v[3].id = ServiceTypeId::Infotainment;
  v[3].usage_share = 0.25;
  v[3].active_period_s = 30.0;
  v[3].idle_period_s = 45.0;
  v[3].mean_interarrival_s = 6.0;
  v[3].upload_kb = 25.0;
  v[3].download_kb = 400.0;  // largest download of the four
  v[3].task_length_mi = 3375.0;
  v[3].required_cores = 1;
  v[3].vm_utilization_pct = 4.0;
  v[3].delay_sensitivity = 0.3;
  v[3].cloud_offload_prob = 0.0;
  v[3].max_delay_ms = 120.0;

  return v;
}

inline const std::vector<ServiceProfile>& catalog_or_default(const ExperimentConfig& cfg) {
  static const std::vector<ServiceProfile> defaults = default_service_catalog();
  return cfg.services.empty() ? defaults : cfg.services;
}

namespace detail {

inline void check_positive(std::vector<std::string>& issues, double v, const char* field) {
  if (!(v > 0.0)) issues.push_back(std::string(field) + " must be > 0");
}

inline void check_nonneg(std::vector<std::string>& issues, double v, const char* field) {
  if (!(v >= 0.0)) issues.push_back(std::string(field) + " must be >= 0");
}

inline void check_prob(std::vector<std::string>& issues, double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0)) issues.push_back(std::string(field) + " must be in [0,1]");
}

inline void validate_profile(std::vector<std::string>& issues, const ServiceProfile& p,
                             const std::string& prefix) {
  check_positive(issues, p.usage_share, (prefix + ".usage_share").c_str());
  check_positive(issues, p.active_period_s, (prefix + ".active_period_s").c_str());
  check_positive(issues, p.idle_period_s, (prefix + ".idle_period_s").c_str());
  check_positive(issues, p.mean_interarrival_s, (prefix + ".mean_interarrival_s").c_str());
  check_positive(issues, p.upload_kb, (prefix + ".upload_kb").c_str());
  check_positive(issues, p.download_kb, (prefix + ".download_kb").c_str());
  check_positive(issues, p.task_length_mi, (prefix + ".task_length_mi").c_str());
  if (p.required_cores < 1) issues.push_back(prefix + ".required_cores must be >= 1");
  check_positive(issues, p.vm_utilization_pct, (prefix + ".vm_utilization_pct").c_str());
  check_prob(issues, p.delay_sensitivity, (prefix + ".delay_sensitivity").c_str());
  check_prob(issues, p.cloud_offload_prob, (prefix + ".cloud_offload_prob").c_str());
  check_positive(issues, p.max_delay_ms, (prefix + ".max_delay_ms").c_str());
}

}  // namespace detail

// Collects every violated invariant; throws InvalidConfig listing all of them.
inline const ExperimentConfig& validate_config(const ExperimentConfig& cfg) {
  using namespace detail;
  std::vector<std::string> issues;

  check_positive(issues, cfg.area_m[0], "area_m[0]");
  check_positive(issues, cfg.area_m[1], "area_m[1]");
  if (cfg.n_devices < 1) issues.push_back("n_devices must be >= 1");
  if (cfg.n_users < 1) issues.push_back("n_users must be >= 1");
  if (cfg.user_counts_sweep.empty()) issues.push_back("user_counts_sweep must be non-empty");
  for (int c : cfg.user_counts_sweep)
    if (c < 1) issues.push_back("user_counts_sweep entries must be >= 1");
  if (cfg.n_repetitions < 1) issues.push_back("n_repetitions must be >= 1");
  check_positive(issues, cfg.sim_duration_s, "sim_duration_s");
  check_nonneg(issues, cfg.warmup_s, "warmup_s");
  if (!(cfg.warmup_s < cfg.sim_duration_s)) issues.push_back("warmup_s must be < sim_duration_s");
  check_positive(issues, cfg.tick_s, "tick_s");
  check_nonneg(issues, cfg.speed_threshold_mps, "speed_threshold_mps");

  if (cfg.kmeans.target_cluster_size < 1) issues.push_back("kmeans.target_cluster_size must be >= 1");
  check_positive(issues, cfg.kmeans.outlier_radius, "kmeans.outlier_radius");
  if (cfg.kmeans.max_iter < 1) issues.push_back("kmeans.max_iter must be >= 1");
  if (cfg.kmeans.n_init < 1) issues.push_back("kmeans.n_init must be >= 1");
  check_nonneg(issues, cfg.kmeans.padding_fraction, "kmeans.padding_fraction");
  check_positive(issues, cfg.radial.radius, "radial.radius");
  check_nonneg(issues, cfg.radial.padding_fraction, "radial.padding_fraction");
  if (cfg.radial.min_members < 1) issues.push_back("radial.min_members must be >= 1");
  check_nonneg(issues, cfg.churn_threshold, "churn_threshold");

  for (int i = 0; i < kNumTechs; ++i)
    for (int j = 0; j < kNumTechs; ++j) {
      check_nonneg(issues, cfg.latency.tech_base_ms[i][j], "latency.tech_base_ms");
      if (cfg.latency.tech_base_ms[i][j] != cfg.latency.tech_base_ms[j][i])
        issues.push_back("latency.tech_base_ms must be symmetric");
    }
  check_nonneg(issues, cfg.latency.per_meter_ms, "latency.per_meter_ms");
  check_nonneg(issues, cfg.latency.jitter_sd_ms, "latency.jitter_sd_ms");
  check_positive(issues, cfg.latency.ceiling_ms, "latency.ceiling_ms");
  check_positive(issues, cfg.latency.bluetooth_range_m, "latency.bluetooth_range_m");

  if (cfg.embedding.max_iter < 1) issues.push_back("embedding.max_iter must be >= 1");
  check_positive(issues, cfg.embedding.tol, "embedding.tol");
  if (cfg.embedding.restarts < 1) issues.push_back("embedding.restarts must be >= 1");

  if (cfg.devices.vm_slots_total < 1) issues.push_back("devices.vm_slots_total must be >= 1");
  check_positive(issues, cfg.devices.vm_mips, "devices.vm_mips");
  check_positive(issues, cfg.bandwidth_kbps, "bandwidth_kbps");
  check_prob(issues, cfg.users.high_mobility_share, "users.high_mobility_share");
  if (!(cfg.users.pedestrian_speed_min_mps >= 0.0 &&
        cfg.users.pedestrian_speed_max_mps >= cfg.users.pedestrian_speed_min_mps))
    issues.push_back("users.pedestrian_speed range invalid");
  if (!(cfg.users.vehicle_speed_min_mps >= 0.0 &&
        cfg.users.vehicle_speed_max_mps >= cfg.users.vehicle_speed_min_mps))
    issues.push_back("users.vehicle_speed range invalid");

  const auto& catalog = catalog_or_default(cfg);
  if (catalog.size() != static_cast<std::size_t>(kNumServices)) {
    issues.push_back("services must contain exactly 4 profiles");
  } else {
    double share_sum = 0.0;
    for (const auto& p : catalog) {
      detail::validate_profile(issues, p, std::string("services.") + to_string(p.id));
      share_sum += p.usage_share;
    }
    if (std::abs(share_sum - 1.0) > 1e-9)
      issues.push_back("services usage_share must sum to 1");
    for (int s = 0; s < kNumServices; ++s)
      if (static_cast<int>(catalog[s].id) != s)
        issues.push_back("services must be ordered AR, EHealth, Gaming, Infotainment");
  }

  if (!issues.empty()) throw InvalidConfig(std::move(issues));
  return cfg;
}

}  // namespace edgeseg
