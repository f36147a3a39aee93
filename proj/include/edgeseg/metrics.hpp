#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace edgeseg {

// Whole-run task accounting; conservation must hold after every tick.
struct TaskLedger {
  std::uint64_t generated = 0;
  std::uint64_t completed = 0;
  std::uint64_t failed_mobility = 0;
  std::uint64_t failed_capacity = 0;
  std::uint64_t in_flight = 0;
  std::uint64_t offloaded_cloud = 0;  // sent to the cloud, outside edge accounting

  bool conserved() const {
    return generated == completed + failed_mobility + failed_capacity + in_flight;
  }
};

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Nearest-rank percentile on a copy; q in [0,1].
inline double percentile_of(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double rank = std::ceil(q * static_cast<double>(v.size()));
  auto idx = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
  return v[std::min(idx, v.size() - 1)];
}

// Per-run results. Scalar metrics cover post-warmup events only; the series
// span every tick (index = tick number) so callers can window them.
struct MetricsReport {
  TaskLedger ledger;  // full run, including warmup

  // Post-warmup event counts.
  std::uint64_t generated = 0;
  std::uint64_t completed = 0;
  std::uint64_t failed_mobility = 0;
  std::uint64_t failed_capacity = 0;

  double mean_network_delay_ms = 0.0;
  double p50_network_delay_ms = 0.0;
  double p95_network_delay_ms = 0.0;
  double failure_rate_mobility = 0.0;  // failed_mobility / generated
  double failure_rate_capacity = 0.0;  // failed_capacity / generated
  bool no_events = false;              // nothing generated (or completed) post-warmup

  double mean_churn_pct = 0.0;        // mean cluster degradation, post-warmup ticks
  double mean_nomad_fraction = 0.0;   // post-warmup ticks
  std::uint32_t resegmentations = 0;  // full run
  double stress_final = 0.0;          // embedding stress at the last tick
  int n_subspaces_final = 0;

  std::vector<double> churn_series_pct;
  std::vector<double> nomad_series;

  double wall_time_s = 0.0;
};

}  // namespace edgeseg
