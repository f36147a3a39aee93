#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include <edgeseg/engine.hpp>
#include <edgeseg/errors.hpp>

using namespace edgeseg;

namespace {

// Small world that finishes fast: few users, few devices, short horizon.
ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n_users = 15;
  cfg.n_devices = 6;
  cfg.sim_duration_s = 40.0;
  cfg.warmup_s = 10.0;
  cfg.embedding.restarts = 4;
  return cfg;
}

std::vector<ServiceProfile> uniform_catalog(double mean_ia_s, double active_s, double idle_s,
                                            double offload_prob) {
  auto cat = default_service_catalog();
  for (auto& p : cat) {
    p.mean_interarrival_s = mean_ia_s;
    p.active_period_s = active_s;
    p.idle_period_s = idle_s;
    p.cloud_offload_prob = offload_prob;
  }
  return cat;
}

}  // namespace

TEST_CASE("task delay is round-trip latency plus transfer time", "[engine]") {
  CHECK(task_delay_ms(10.0, 0.0, 10000.0) == Catch::Approx(20.0));
  // 1000 kB over 10000 kbps adds 100 ms on top of the round trip
  CHECK(task_delay_ms(10.0, 1000.0, 10000.0) == Catch::Approx(120.0));
  CHECK(task_delay_ms(0.0, 500.0, 10000.0) == Catch::Approx(50.0));
}

TEST_CASE("active overlap follows the duty cycle", "[engine]") {
  // active 40 s then idle 20 s, zero phase offset
  CHECK(active_overlap(0.0, 10.0, 0.0, 40.0, 60.0) == Catch::Approx(10.0));
  CHECK(active_overlap(35.0, 45.0, 0.0, 40.0, 60.0) == Catch::Approx(5.0));
  CHECK(active_overlap(45.0, 55.0, 0.0, 40.0, 60.0) == Catch::Approx(0.0));
  CHECK(active_overlap(55.0, 65.0, 0.0, 40.0, 60.0) == Catch::Approx(5.0));
  // a full period always contributes exactly the active span
  CHECK(active_overlap(17.0, 77.0, 0.0, 40.0, 60.0) == Catch::Approx(40.0));
  // the offset shifts the window into the cycle
  CHECK(active_overlap(0.0, 10.0, 45.0, 40.0, 60.0) == Catch::Approx(0.0));
  CHECK(active_overlap(0.0, 10.0, 55.0, 40.0, 60.0) == Catch::Approx(5.0));
}

TEST_CASE("percentiles use the nearest rank", "[engine]") {
  std::vector<double> v = {10, 1, 9, 2, 8, 3, 7, 4, 6, 5};
  CHECK(percentile_of(v, 0.50) == 5.0);
  CHECK(percentile_of(v, 0.95) == 10.0);
  CHECK(percentile_of({3.0}, 0.95) == 3.0);
  CHECK(percentile_of({}, 0.5) == 0.0);
  CHECK(mean_of({}) == 0.0);
  CHECK(mean_of({2.0, 4.0}) == 3.0);
}

TEST_CASE("world initialization respects the configured population", "[engine]") {
  auto cfg = small_config();
  auto w = init_world(cfg, 7);
  REQUIRE(w.users.size() == 15);
  REQUIRE(w.devices.size() == 6);
  REQUIRE(w.mobility.size() == 15);
  REQUIRE(w.taskgen.size() == 15);
  const Area area = cfg.area();
  for (std::size_t i = 0; i < w.devices.size(); ++i) {
    CHECK(w.devices[i].id == static_cast<DeviceId>(i));
    CHECK(w.devices[i].vm_slots_free == cfg.devices.vm_slots_total);
    CHECK(area.contains(w.devices[i].physical_pos));
  }
  for (const auto& u : w.users) {
    CHECK(area.contains(u.physical_pos));
    const bool fast = u.speed_mps > cfg.speed_threshold_mps;
    CHECK(u.mobility_class == (fast ? MobilityClass::HighMobility : MobilityClass::LowMobility));
    if (w.mobility[u.id].vehicle) {
      CHECK(u.speed_mps >= cfg.users.vehicle_speed_min_mps);
      CHECK(u.speed_mps <= cfg.users.vehicle_speed_max_mps);
    } else {
      CHECK(u.speed_mps >= cfg.users.pedestrian_speed_min_mps);
      CHECK(u.speed_mps <= cfg.users.pedestrian_speed_max_mps);
    }
  }
}

TEST_CASE("arrival volume tracks the duty cycle and interarrival mean", "[engine]") {
  ExperimentConfig cfg;
  cfg.n_users = 10;
  cfg.n_devices = 5;
  cfg.devices.vm_slots_total = 50;
  cfg.sim_duration_s = 600.0;
  cfg.warmup_s = 0.0;
  cfg.policy = Policy::Monolithic;  // generation does not depend on the policy
  cfg.services = uniform_catalog(2.0, 40.0, 20.0, 0.0);
  auto r = run(cfg);
  // 10 users for 600 s at 2/3 duty and one task per 2 active seconds
  const double expected = 10.0 * 600.0 * (40.0 / 60.0) / 2.0;
  CHECK(static_cast<double>(r.ledger.generated) ==
        Catch::Approx(expected).epsilon(0.15));
  CHECK(r.ledger.offloaded_cloud == 0);
}

TEST_CASE("ledger stays conserved through a full run", "[engine]") {
  auto cfg = small_config();
  auto r = run(cfg);
  CHECK(r.ledger.conserved());
  CHECK(r.ledger.generated > 0);
  CHECK(r.ledger.completed > 0);
  CHECK(r.generated <= r.ledger.generated);
}

TEST_CASE("stationary users never fail on mobility", "[engine]") {
  auto cfg = small_config();
  cfg.users.high_mobility_share = 0.0;
  cfg.users.pedestrian_speed_min_mps = 0.0;
  cfg.users.pedestrian_speed_max_mps = 0.0;
  cfg.latency.jitter_sd_ms = 0.0;  // static world: stable map, stable membership
  auto r = run(cfg);
  CHECK(r.ledger.failed_mobility == 0);
  CHECK(r.failure_rate_mobility == 0.0);
  CHECK(r.ledger.generated > 0);
}

TEST_CASE("full cloud offload produces a run with no edge events", "[engine]") {
  auto cfg = small_config();
  cfg.services = uniform_catalog(2.0, 40.0, 20.0, 1.0);
  auto r = run(cfg);
  CHECK(r.no_events);
  CHECK(r.ledger.generated == 0);
  CHECK(r.ledger.offloaded_cloud > 0);
  CHECK(r.mean_network_delay_ms == 0.0);
  CHECK(r.failure_rate_mobility == 0.0);
  CHECK(r.failure_rate_capacity == 0.0);
}

TEST_CASE("identical configurations reproduce identical reports", "[engine]") {
  auto cfg = small_config();
  auto a = run(cfg);
  auto b = run(cfg);
  CHECK(a.ledger.generated == b.ledger.generated);
  CHECK(a.ledger.completed == b.ledger.completed);
  CHECK(a.ledger.failed_mobility == b.ledger.failed_mobility);
  CHECK(a.ledger.failed_capacity == b.ledger.failed_capacity);
  CHECK(a.mean_network_delay_ms == b.mean_network_delay_ms);  // bitwise, not approx
  CHECK(a.p95_network_delay_ms == b.p95_network_delay_ms);
  CHECK(a.mean_churn_pct == b.mean_churn_pct);
  CHECK(a.churn_series_pct == b.churn_series_pct);
  CHECK(a.nomad_series == b.nomad_series);
  CHECK(a.resegmentations == b.resegmentations);
  CHECK(a.stress_final == b.stress_final);
}

TEST_CASE("task generation is identical across policies", "[engine]") {
  auto cfg = small_config();
  cfg.policy = Policy::Monolithic;
  auto mono = run(cfg);
  cfg.policy = Policy::DualLayer;
  auto dual = run(cfg);
  cfg.policy = Policy::SingleLayer;
  auto single = run(cfg);
  // same seed, same users: the offered load is policy-independent
  const auto offered_mono = mono.ledger.generated + mono.ledger.offloaded_cloud;
  const auto offered_dual = dual.ledger.generated + dual.ledger.offloaded_cloud;
  const auto offered_single = single.ledger.generated + single.ledger.offloaded_cloud;
  CHECK(offered_mono == offered_dual);
  CHECK(offered_mono == offered_single);
  CHECK(mono.ledger.generated == dual.ledger.generated);
}

TEST_CASE("the monolithic baseline runs without any segmentation", "[engine]") {
  auto cfg = small_config();
  cfg.policy = Policy::Monolithic;
  auto r = run(cfg);
  CHECK(r.n_subspaces_final == 0);
  CHECK(r.resegmentations == 0);
  CHECK(r.stress_final == 0.0);
  for (double c : r.churn_series_pct) CHECK(c == 0.0);
  for (double n : r.nomad_series) CHECK(n == 0.0);
  CHECK(r.ledger.conserved());
}

TEST_CASE("partitioned policies build and maintain subspaces", "[engine]") {
  auto cfg = small_config();
  cfg.n_users = 40;
  cfg.policy = Policy::DualLayer;
  auto r = run(cfg);
  CHECK(r.n_subspaces_final > 0);
  CHECK(r.stress_final >= 0.0);
  REQUIRE(r.churn_series_pct.size() == 40);  // one sample per tick
  REQUIRE(r.nomad_series.size() == 40);
  for (double n : r.nomad_series) {
    CHECK(n >= 0.0);
    CHECK(n <= 1.0);
  }
}

TEST_CASE("an invalid configuration is rejected before simulating", "[engine]") {
  auto cfg = small_config();
  cfg.n_users = 0;
  CHECK_THROWS_AS(run(cfg), InvalidConfig);
}

TEST_CASE("delay percentiles order correctly in a loaded run", "[engine]") {
  auto cfg = small_config();
  cfg.n_users = 30;
  auto r = run(cfg);
  REQUIRE_FALSE(r.no_events);
  CHECK(r.mean_network_delay_ms > 0.0);
  CHECK(r.p50_network_delay_ms <= r.p95_network_delay_ms);
  CHECK(r.failure_rate_mobility >= 0.0);
  CHECK(r.failure_rate_capacity >= 0.0);
  CHECK(r.failure_rate_mobility <= 1.0);
  CHECK(r.failure_rate_capacity <= 1.0);
}
