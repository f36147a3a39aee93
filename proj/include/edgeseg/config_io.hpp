#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "edgeseg/errors.hpp"
#include "edgeseg/model.hpp"

namespace edgeseg {

namespace config_detail {

template <typename E>
E enum_from_string(const std::string& s, std::initializer_list<E> values, const char* field) {
  for (E v : values)
    if (s == to_string(v)) return v;
  throw InvalidConfig({std::string(field) + ": unknown value '" + s + "'"});
}

}  // namespace config_detail

inline void to_json(nlohmann::json& j, const ServiceProfile& p) {
  j = nlohmann::json{
      {"id", to_string(p.id)},
      {"usage_share", p.usage_share},
      {"active_period_s", p.active_period_s},
      {"idle_period_s", p.idle_period_s},
      {"mean_interarrival_s", p.mean_interarrival_s},
      {"upload_kb", p.upload_kb},
      {"download_kb", p.download_kb},
      {"task_length_mi", p.task_length_mi},
      {"required_cores", p.required_cores},
      {"vm_utilization_pct", p.vm_utilization_pct},
      {"delay_sensitivity", p.delay_sensitivity},
      {"cloud_offload_prob", p.cloud_offload_prob},
      {"max_delay_ms", p.max_delay_ms},
  };
}

inline void from_json(const nlohmann::json& j, ServiceProfile& p) {
  p.id = config_detail::enum_from_string<ServiceTypeId>(
      j.at("id").get<std::string>(),
      {ServiceTypeId::AR, ServiceTypeId::EHealth, ServiceTypeId::Gaming,
       ServiceTypeId::Infotainment},
      "services.id");
  j.at("usage_share").get_to(p.usage_share);
  j.at("active_period_s").get_to(p.active_period_s);
  j.at("idle_period_s").get_to(p.idle_period_s);
  j.at("mean_interarrival_s").get_to(p.mean_interarrival_s);
  j.at("upload_kb").get_to(p.upload_kb);
  j.at("download_kb").get_to(p.download_kb);
  j.at("task_length_mi").get_to(p.task_length_mi);
  j.at("required_cores").get_to(p.required_cores);
  j.at("vm_utilization_pct").get_to(p.vm_utilization_pct);
  j.at("delay_sensitivity").get_to(p.delay_sensitivity);
  j.at("cloud_offload_prob").get_to(p.cloud_offload_prob);
  j.at("max_delay_ms").get_to(p.max_delay_ms);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{
      {"area_m", c.area_m},
      {"n_devices", c.n_devices},
      {"n_users", c.n_users},
      {"user_counts_sweep", c.user_counts_sweep},
      {"n_repetitions", c.n_repetitions},
      {"sim_duration_s", c.sim_duration_s},
      {"warmup_s", c.warmup_s},
      {"tick_s", c.tick_s},
      {"rng_seed", c.rng_seed},
      {"speed_threshold_mps", c.speed_threshold_mps},
      {"policy", to_string(c.policy)},
      {"clustering_mode", to_string(c.clustering_mode)},
      {"monolithic_placement", to_string(c.monolithic_placement)},
      {"kmeans",
       {{"target_cluster_size", c.kmeans.target_cluster_size},
        {"outlier_radius", c.kmeans.outlier_radius},
        {"max_iter", c.kmeans.max_iter},
        {"n_init", c.kmeans.n_init},
        {"padding_fraction", c.kmeans.padding_fraction}}},
      {"radial",
       {{"radius", c.radial.radius},
        {"padding_fraction", c.radial.padding_fraction},
        {"min_members", c.radial.min_members}}},
      {"churn_threshold", c.churn_threshold},
      {"latency",
       {{"tech_base_ms", c.latency.tech_base_ms},
        {"per_meter_ms", c.latency.per_meter_ms},
        {"jitter_sd_ms", c.latency.jitter_sd_ms},
        {"ceiling_ms", c.latency.ceiling_ms},
        {"bluetooth_range_m", c.latency.bluetooth_range_m}}},
      {"embedding",
       {{"max_iter", c.embedding.max_iter},
        {"tol", c.embedding.tol},
        {"restarts", c.embedding.restarts}}},
      {"placement",
       {{"cold_max_iter", c.placement.cold_max_iter},
        {"cold_tol", c.placement.cold_tol},
        {"cold_restarts", c.placement.cold_restarts},
        {"warm_max_iter", c.placement.warm_max_iter},
        {"warm_tol", c.placement.warm_tol}}},
      {"devices",
       {{"vm_slots_total", c.devices.vm_slots_total},
        {"vm_mips", c.devices.vm_mips},
        {"tech_shares", c.devices.tech_shares}}},
      {"users",
       {{"high_mobility_share", c.users.high_mobility_share},
        {"tech_shares", c.users.tech_shares},
        {"pedestrian_speed_min_mps", c.users.pedestrian_speed_min_mps},
        {"pedestrian_speed_max_mps", c.users.pedestrian_speed_max_mps},
        {"vehicle_speed_min_mps", c.users.vehicle_speed_min_mps},
        {"vehicle_speed_max_mps", c.users.vehicle_speed_max_mps},
        {"heading_sigma_rad", c.users.heading_sigma_rad},
        {"dwell_max_s", c.users.dwell_max_s}}},
      {"bandwidth_kbps", c.bandwidth_kbps},
      {"services", c.services.empty() ? default_service_catalog() : c.services},
  };
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  j.at("area_m").get_to(c.area_m);
  j.at("n_devices").get_to(c.n_devices);
  j.at("n_users").get_to(c.n_users);
  j.at("user_counts_sweep").get_to(c.user_counts_sweep);
  j.at("n_repetitions").get_to(c.n_repetitions);
  j.at("sim_duration_s").get_to(c.sim_duration_s);
  j.at("warmup_s").get_to(c.warmup_s);
  j.at("tick_s").get_to(c.tick_s);
  j.at("rng_seed").get_to(c.rng_seed);
  j.at("speed_threshold_mps").get_to(c.speed_threshold_mps);
  c.policy = config_detail::enum_from_string<Policy>(
      j.at("policy").get<std::string>(),
      {Policy::Monolithic, Policy::SingleLayer, Policy::DualLayer}, "policy");
  c.clustering_mode = config_detail::enum_from_string<ClusteringMode>(
      j.at("clustering_mode").get<std::string>(), {ClusteringMode::Lax, ClusteringMode::Strict},
      "clustering_mode");
  c.monolithic_placement = config_detail::enum_from_string<PlacementMetric>(
      j.at("monolithic_placement").get<std::string>(),
      {PlacementMetric::MeasuredLatency, PlacementMetric::PhysicalDistance},
      "monolithic_placement");
  const auto& k = j.at("kmeans");
  k.at("target_cluster_size").get_to(c.kmeans.target_cluster_size);
  k.at("outlier_radius").get_to(c.kmeans.outlier_radius);
  k.at("max_iter").get_to(c.kmeans.max_iter);
  k.at("n_init").get_to(c.kmeans.n_init);
  k.at("padding_fraction").get_to(c.kmeans.padding_fraction);
  const auto& r = j.at("radial");
  r.at("radius").get_to(c.radial.radius);
  r.at("padding_fraction").get_to(c.radial.padding_fraction);
  r.at("min_members").get_to(c.radial.min_members);
  j.at("churn_threshold").get_to(c.churn_threshold);
  const auto& l = j.at("latency");
  l.at("tech_base_ms").get_to(c.latency.tech_base_ms);
  l.at("per_meter_ms").get_to(c.latency.per_meter_ms);
  l.at("jitter_sd_ms").get_to(c.latency.jitter_sd_ms);
  l.at("ceiling_ms").get_to(c.latency.ceiling_ms);
  l.at("bluetooth_range_m").get_to(c.latency.bluetooth_range_m);
  const auto& e = j.at("embedding");
  e.at("max_iter").get_to(c.embedding.max_iter);
  e.at("tol").get_to(c.embedding.tol);
  e.at("restarts").get_to(c.embedding.restarts);
  const auto& p = j.at("placement");
  p.at("cold_max_iter").get_to(c.placement.cold_max_iter);
  p.at("cold_tol").get_to(c.placement.cold_tol);
  p.at("cold_restarts").get_to(c.placement.cold_restarts);
  p.at("warm_max_iter").get_to(c.placement.warm_max_iter);
  p.at("warm_tol").get_to(c.placement.warm_tol);
  const auto& d = j.at("devices");
  d.at("vm_slots_total").get_to(c.devices.vm_slots_total);
  d.at("vm_mips").get_to(c.devices.vm_mips);
  d.at("tech_shares").get_to(c.devices.tech_shares);
  const auto& u = j.at("users");
  u.at("high_mobility_share").get_to(c.users.high_mobility_share);
  u.at("tech_shares").get_to(c.users.tech_shares);
  u.at("pedestrian_speed_min_mps").get_to(c.users.pedestrian_speed_min_mps);
  u.at("pedestrian_speed_max_mps").get_to(c.users.pedestrian_speed_max_mps);
  u.at("vehicle_speed_min_mps").get_to(c.users.vehicle_speed_min_mps);
  u.at("vehicle_speed_max_mps").get_to(c.users.vehicle_speed_max_mps);
  u.at("heading_sigma_rad").get_to(c.users.heading_sigma_rad);
  u.at("dwell_max_s").get_to(c.users.dwell_max_s);
  j.at("bandwidth_kbps").get_to(c.bandwidth_kbps);
  j.at("services").get_to(c.services);
}

// Canonical form: sorted keys, two-space indent, trailing newline.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  nlohmann::json j = cfg;
  return j.dump(2) + "\n";
}

inline ExperimentConfig parse_config(const std::string& text) {
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    return j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig({std::string("parse error: ") + e.what()});
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig({"cannot open config file: " + path});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// Applies a dotted-path override ("kmeans.outlier_radius=15") on top of the
// JSON form of a config. The value is parsed as a JSON literal when possible,
// else taken as a string.
inline void apply_override(nlohmann::json& j, const std::string& path, const std::string& value) {
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw InvalidConfig({"bad override path: " + path});
    nlohmann::json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (...) {
        throw InvalidConfig({"array index expected in override path: " + path});
      }
      if (idx >= node->size()) throw InvalidConfig({"override index out of range: " + path});
      next = &(*node)[idx];
    } else {
      if (!node->contains(key)) throw InvalidConfig({"unknown config field: " + path});
      next = &(*node)[key];
    }
    if (dot == std::string::npos) {
      nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
      *next = parsed.is_discarded() ? nlohmann::json(value) : parsed;
      return;
    }
    node = next;
    start = dot + 1;
  }
}

inline ExperimentConfig config_with_overrides(const ExperimentConfig& base,
                                              const std::vector<std::string>& overrides) {
  nlohmann::json j = base;
  for (const auto& kv : overrides) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig({"override must be key.path=value, got: " + kv});
    apply_override(j, kv.substr(0, eq), kv.substr(eq + 1));
  }
  try {
    return j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig({std::string("override produced invalid config: ") + e.what()});
  }
}

}  // namespace edgeseg
