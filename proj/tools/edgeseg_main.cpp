// Command-line front end: single runs, the full comparison sweep, config
// validation, and debug dumps of the latency map and segmentation state.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <edgeseg/edgeseg.hpp>

namespace {

using namespace edgeseg;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::string> overrides;
  int ticks = 60;  // dump-segmentation only
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Config file (JSON); defaults built in");
  cmd->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", opts.seed, "Override rng_seed");
  cmd->add_option("--jobs", opts.jobs, "Worker threads for sweeps")->capture_default_str();
  cmd->add_option("--set", opts.overrides, "Config override, key.path=value (repeatable)");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig cfg =
      opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
  if (!opts.overrides.empty()) cfg = config_with_overrides(cfg, opts.overrides);
  if (opts.seed) cfg.rng_seed = *opts.seed;
  validate_config(cfg);
  return cfg;
}

void ensure_out(const std::string& dir) { std::filesystem::create_directories(dir); }

nlohmann::json report_json(const MetricsReport& m) {
  return nlohmann::json{
      {"generated", m.generated},
      {"completed", m.completed},
      {"failed_mobility", m.failed_mobility},
      {"failed_capacity", m.failed_capacity},
      {"mean_delay_ms", m.mean_network_delay_ms},
      {"p50_delay_ms", m.p50_network_delay_ms},
      {"p95_delay_ms", m.p95_network_delay_ms},
      {"failure_rate_mobility", m.failure_rate_mobility},
      {"failure_rate_capacity", m.failure_rate_capacity},
      {"mean_churn_pct", m.mean_churn_pct},
      {"mean_nomad_fraction", m.mean_nomad_fraction},
      {"resegmentations", m.resegmentations},
      {"stress_final", m.stress_final},
      {"n_subspaces_final", m.n_subspaces_final},
      {"no_events", m.no_events},
      {"wall_time_s", m.wall_time_s},
      {"ledger",
       {{"generated", m.ledger.generated},
        {"completed", m.ledger.completed},
        {"failed_mobility", m.ledger.failed_mobility},
        {"failed_capacity", m.ledger.failed_capacity},
        {"in_flight", m.ledger.in_flight},
        {"offloaded_cloud", m.ledger.offloaded_cloud}}},
  };
}

int cmd_validate(const CommonOpts& opts) {
  resolve_config(opts);
  std::cout << "ok\n";
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  ExperimentConfig cfg = resolve_config(opts);
  MetricsReport m = run(cfg);
  ensure_out(opts.out_dir);

  ResultTable table;
  ResultRow row;
  row.policy = cfg.policy;
  row.mode = cfg.clustering_mode;
  row.user_count = cfg.n_users;
  row.repetition = 0;
  row.seed = cfg.rng_seed;
  row.report = m;
  table.rows.push_back(std::move(row));
  write_csv(opts.out_dir + "/run.csv", results_csv(table));
  write_file(opts.out_dir + "/run_summary.json", report_json(m).dump(2) + "\n");

  std::cout << "policy=" << to_string(cfg.policy) << " mode=" << to_string(cfg.clustering_mode)
            << " users=" << cfg.n_users << " seed=" << cfg.rng_seed << "\n"
            << "  generated=" << m.generated << " completed=" << m.completed
            << " failed_mobility=" << m.failed_mobility
            << " failed_capacity=" << m.failed_capacity << "\n"
            << "  mean_delay_ms=" << m.mean_network_delay_ms
            << " churn_pct=" << m.mean_churn_pct << " reseg=" << m.resegmentations
            << " wall_s=" << m.wall_time_s << "\n";
  return 0;
}

int cmd_sweep(const CommonOpts& opts) {
  ExperimentConfig cfg = resolve_config(opts);
  SweepSpec spec = default_sweep_spec(cfg);
  ensure_out(opts.out_dir);

  auto t0 = std::chrono::steady_clock::now();
  ResultTable table = run_sweep(cfg, spec, opts.jobs,
                                [](const ResultRow& r, std::size_t done, std::size_t total) {
                                  std::cerr << "[" << done << "/" << total << "] "
                                            << to_string(r.policy) << "/" << to_string(r.mode)
                                            << " users=" << r.user_count << " rep=" << r.repetition
                                            << (r.error.empty() ? "" : " FAILED: " + r.error)
                                            << "\n";
                                });
  double wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_csv(opts.out_dir + "/results.csv", results_csv(table));
  write_csv(opts.out_dir + "/aggregate.csv", aggregate_csv(aggregate(table)));
  FigureFiles figs = figure_files(table, spec.user_counts);
  write_figure_files(figs, opts.out_dir);

  int failed = 0;
  for (const auto& r : table.rows)
    if (!r.error.empty()) ++failed;
  nlohmann::json summary{{"cells", table.rows.size()},
                         {"failed", failed},
                         {"wall_time_s", wall_s},
                         {"jobs", opts.jobs},
                         {"base_seed", spec.base_seed},
                         {"user_counts", spec.user_counts},
                         {"repetitions", spec.repetitions}};
  write_file(opts.out_dir + "/sweep_summary.json", summary.dump(2) + "\n");

  std::cout << "cells=" << table.rows.size() << " failed=" << failed << " wall_s=" << wall_s
            << " -> " << opts.out_dir << "\n";
  return failed == 0 ? 0 : 2;
}

int cmd_dump_map(const CommonOpts& opts) {
  ExperimentConfig cfg = resolve_config(opts);
  World w = init_world(cfg, cfg.rng_seed);
  w.matrix = build_latency_matrix(w.users, w.devices, cfg.latency, w.seed, 0, 0.0);
  LatencyMap map = refresh_map(w.matrix, w.users, w.devices, std::nullopt, cfg.latency,
                               cfg.embedding, cfg.placement, substream_seed(w.seed, "map"));
  ensure_out(opts.out_dir);

  CsvTable t;
  t.header = {"kind", "id", "x", "y", "localized"};
  for (std::size_t d = 0; d < map.anchor_coords.size(); ++d)
    t.rows.push_back({"anchor", std::to_string(map.device_ids[d]),
                      format_double(map.anchor_coords[d].x), format_double(map.anchor_coords[d].y),
                      "1"});
  for (std::size_t u = 0; u < map.user_coords.size(); ++u) {
    const auto& c = map.user_coords[u];
    t.rows.push_back({"user", std::to_string(u), c ? format_double(c->x) : "",
                      c ? format_double(c->y) : "", c ? "1" : "0"});
  }
  write_csv(opts.out_dir + "/map.csv", t);
  std::cout << "anchors=" << map.anchor_coords.size() << " users=" << map.user_coords.size()
            << " stress=" << map.stress_value << " -> " << opts.out_dir << "/map.csv\n";
  return 0;
}

int cmd_dump_segmentation(const CommonOpts& opts) {
  ExperimentConfig cfg = resolve_config(opts);
  if (cfg.policy == Policy::Monolithic)
    throw InvalidConfig({"dump-segmentation requires a partitioned policy"});
  World w = init_world(cfg, cfg.rng_seed);
  for (int t = 0; t < opts.ticks; ++t) tick(w);
  if (!w.seg) throw SimulationError("no segmentation after ticking");
  ensure_out(opts.out_dir);

  CsvTable t;
  t.header = {"subspace", "layer",   "center_x",     "center_y", "radius",
              "boundary", "members", "roster_size",  "devices",  "churn_pct"};
  for (const auto& s : w.seg->subspaces) {
    double churn = 100.0 * cluster_health(s.roster_at_creation, s.members);
    t.rows.push_back({std::to_string(s.id),
                      s.layer == MobilityClass::LowMobility ? "low" : "high",
                      format_double(s.center.x), format_double(s.center.y),
                      format_double(s.radius), format_double(s.boundary()),
                      std::to_string(s.members.size()), std::to_string(s.roster_at_creation.size()),
                      std::to_string(s.devices.size()), format_double(churn)});
  }
  write_csv(opts.out_dir + "/segmentation.csv", t);
  std::cout << "ticks=" << opts.ticks << " subspaces=" << w.seg->subspaces.size()
            << " nomads=" << w.seg->nomads.size() << " reseg=" << w.resegmentations << " -> "
            << opts.out_dir << "/segmentation.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge segmentation simulator"};
  app.require_subcommand(1);

  CommonOpts run_opts, sweep_opts, val_opts, map_opts, seg_opts;
  auto* c_run = app.add_subcommand("run", "Single simulation run");
  add_common(c_run, run_opts);
  auto* c_sweep = app.add_subcommand("sweep", "Policy comparison sweep over user counts");
  add_common(c_sweep, sweep_opts);
  auto* c_val = app.add_subcommand("validate-config", "Validate a config and exit");
  add_common(c_val, val_opts);
  auto* c_map = app.add_subcommand("dump-map", "Dump the initial latency-map embedding");
  add_common(c_map, map_opts);
  auto* c_seg = app.add_subcommand("dump-segmentation", "Dump segmentation state after N ticks");
  add_common(c_seg, seg_opts);
  c_seg->add_option("--ticks", seg_opts.ticks, "Ticks to simulate before dumping")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_run->parsed()) return cmd_run(run_opts);
    if (c_sweep->parsed()) return cmd_sweep(sweep_opts);
    if (c_val->parsed()) return cmd_validate(val_opts);
    if (c_map->parsed()) return cmd_dump_map(map_opts);
    if (c_seg->parsed()) return cmd_dump_segmentation(seg_opts);
  } catch (const edgeseg::InvalidConfig& e) {
    nlohmann::json err{{"error", "invalid_config"}, {"issues", e.issues}};
    std::cerr << err.dump(2) << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", "runtime"}, {"message", e.what()}};
    std::cerr << err.dump(2) << "\n";
    return 2;
  }
  return 0;
}
