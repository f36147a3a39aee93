#pragma once

#include <cstdint>
#include <vector>

#include "edgeseg/errors.hpp"
#include "edgeseg/geometry.hpp"
#include "edgeseg/model.hpp"
#include "edgeseg/rng.hpp"

namespace edgeseg {

// Measured pairwise latencies in milliseconds. device_device is symmetric
// with a zero diagonal (self entries are excluded from the embedding).
// Unreachable pairs hold exactly params.ceiling_ms.
struct LatencyMatrix {
  int n_users = 0;
  int n_devices = 0;
  std::vector<double> user_device;    // n_users x n_devices, row-major
  std::vector<double> device_device;  // n_devices x n_devices, row-major
  double measured_at = 0.0;

  double ud(int u, int d) const { return user_device[static_cast<std::size_t>(u) * n_devices + d]; }
  double& ud(int u, int d) { return user_device[static_cast<std::size_t>(u) * n_devices + d]; }
  double dd(int i, int j) const { return device_device[static_cast<std::size_t>(i) * n_devices + j]; }
  double& dd(int i, int j) { return device_device[static_cast<std::size_t>(i) * n_devices + j]; }
};

inline constexpr double kMinLatencyMs = 1e-3;  // jitter floor; all entries stay > 0

// Affine-in-distance latency with a per-technology-pair base, Gaussian jitter,
// and a Bluetooth range cutoff that yields the unreachable ceiling.
inline double pairwise_latency(const Vec2& a_pos, CommTech a_tech, const Vec2& b_pos,
                               CommTech b_tech, const LatencyModelParams& params, Rng& rng) {
  const double dist = distance(a_pos, b_pos);
  if ((a_tech == CommTech::Bluetooth || b_tech == CommTech::Bluetooth) &&
      dist > params.bluetooth_range_m) {
    return params.ceiling_ms;
  }
  const double base = params.tech_base_ms[static_cast<int>(a_tech)][static_cast<int>(b_tech)];
  double v = base + params.per_meter_ms * dist;
  if (params.jitter_sd_ms > 0.0) v += rng.normal(0.0, params.jitter_sd_ms);
  return v < kMinLatencyMs ? kMinLatencyMs : v;
}

// Fills the full matrix. Each pair draws from its own substream seeded by
// (seed, ids, epoch), so entries are reproducible independent of evaluation
// order. The device block averages two draws per unordered pair and is
// exactly symmetric.
inline LatencyMatrix build_latency_matrix(const std::vector<EndUser>& users,
                                          const std::vector<EdgeDevice>& devices,
                                          const LatencyModelParams& params, std::uint64_t seed,
                                          std::uint64_t epoch, double measured_at) {
  if (devices.size() < 3) throw TooFewAnchors("latency matrix needs >= 3 devices");

  LatencyMatrix m;
  m.n_users = static_cast<int>(users.size());
  m.n_devices = static_cast<int>(devices.size());
  m.measured_at = measured_at;
  m.user_device.resize(users.size() * devices.size());
  m.device_device.assign(devices.size() * devices.size(), 0.0);

  for (int u = 0; u < m.n_users; ++u) {
    for (int d = 0; d < m.n_devices; ++d) {
      Rng rng(substream_seed(seed, "lat.ud", users[u].id, devices[d].id, epoch));
      m.ud(u, d) = pairwise_latency(users[u].physical_pos, users[u].comm_tech,
                                    devices[d].physical_pos, devices[d].comm_tech, params, rng);
    }
  }
  for (int i = 0; i < m.n_devices; ++i) {
    for (int j = i + 1; j < m.n_devices; ++j) {
      Rng rng(substream_seed(seed, "lat.dd", devices[i].id, devices[j].id, epoch));
      double a = pairwise_latency(devices[i].physical_pos, devices[i].comm_tech,
                                  devices[j].physical_pos, devices[j].comm_tech, params, rng);
      double b = pairwise_latency(devices[j].physical_pos, devices[j].comm_tech,
                                  devices[i].physical_pos, devices[i].comm_tech, params, rng);
      double v = 0.5 * (a + b);
      m.dd(i, j) = v;
      m.dd(j, i) = v;
    }
  }
  return m;
}

inline bool is_unreachable(double latency_ms, const LatencyModelParams& params) {
  return latency_ms >= params.ceiling_ms;
}

}  // namespace edgeseg
