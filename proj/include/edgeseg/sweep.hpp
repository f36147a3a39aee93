#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "edgeseg/csv.hpp"
#include "edgeseg/engine.hpp"
#include "edgeseg/errors.hpp"
#include "edgeseg/model.hpp"
#include "edgeseg/rng.hpp"

namespace edgeseg {

// One experiment cell. The seed depends only on (base seed, count, rep), so
// all policy/mode combos of a cell see identical populations and task flows.
struct SweepCell {
  Policy policy = Policy::Monolithic;
  ClusteringMode mode = ClusteringMode::Lax;
  int user_count = 0;
  int repetition = 0;
  std::uint64_t seed = 0;
};

struct SweepSpec {
  std::vector<int> user_counts;
  int repetitions = 25;
  std::vector<Policy> policies = {Policy::Monolithic, Policy::SingleLayer, Policy::DualLayer};
  std::vector<ClusteringMode> clustering_modes = {ClusteringMode::Lax};
  // Adds a DualLayer/Strict cell per (count, rep) for the clustering-strategy
  // health comparison when that combo is not already covered.
  bool strict_health_cells = false;
  std::uint64_t base_seed = 42;

  std::vector<std::pair<Policy, ClusteringMode>> combos() const {
    std::vector<std::pair<Policy, ClusteringMode>> out;
    for (Policy p : policies)
      for (ClusteringMode m : clustering_modes) out.emplace_back(p, m);
    auto dual_strict = std::pair(Policy::DualLayer, ClusteringMode::Strict);
    if (strict_health_cells && std::find(out.begin(), out.end(), dual_strict) == out.end())
      out.push_back(dual_strict);
    return out;
  }
};

inline SweepSpec default_sweep_spec(const ExperimentConfig& cfg) {
  SweepSpec s;
  s.user_counts = cfg.user_counts_sweep;
  s.repetitions = cfg.n_repetitions;
  s.strict_health_cells = true;
  s.base_seed = cfg.rng_seed;
  return s;
}

struct ResultRow {
  Policy policy = Policy::Monolithic;
  ClusteringMode mode = ClusteringMode::Lax;
  int user_count = 0;
  int repetition = 0;
  std::uint64_t seed = 0;
  MetricsReport report;
  std::string error;  // non-empty => the run failed and report is empty
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

inline std::vector<SweepCell> enumerate_cells(const SweepSpec& spec) {
  std::vector<SweepCell> cells;
  const auto combos = spec.combos();
  for (int count : spec.user_counts)
    for (int rep = 0; rep < spec.repetitions; ++rep) {
      std::uint64_t seed = substream_seed(spec.base_seed, "cell", static_cast<std::uint64_t>(count),
                                          static_cast<std::uint64_t>(rep));
      for (auto [policy, mode] : combos) cells.push_back(SweepCell{policy, mode, count, rep, seed});
    }
  return cells;
}

inline ResultRow run_cell(const ExperimentConfig& base, const SweepCell& cell) {
  ResultRow row;
  row.policy = cell.policy;
  row.mode = cell.mode;
  row.user_count = cell.user_count;
  row.repetition = cell.repetition;
  row.seed = cell.seed;
  ExperimentConfig cfg = base;
  cfg.n_users = cell.user_count;
  cfg.policy = cell.policy;
  cfg.clustering_mode = cell.mode;
  cfg.rng_seed = cell.seed;
  try {
    row.report = run(cfg);
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

// Runs every cell on a small worker pool. Row order in the result is
// canonical -- (policy, mode, user_count, repetition) -- independent of
// scheduling.
inline ResultTable run_sweep(const ExperimentConfig& base, const SweepSpec& spec, int jobs,
                             const std::function<void(const ResultRow&, std::size_t, std::size_t)>&
                                 on_result = nullptr) {
  std::vector<SweepCell> cells = enumerate_cells(spec);
  ResultTable table;
  table.rows.resize(cells.size());

  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex cb_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      table.rows[i] = run_cell(base, cells[i]);
      std::size_t d = done.fetch_add(1) + 1;
      if (on_result) {
        std::lock_guard<std::mutex> lock(cb_mutex);
        on_result(table.rows[i], d, cells.size());
      }
    }
  };
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::sort(table.rows.begin(), table.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tuple(static_cast<int>(a.policy), static_cast<int>(a.mode), a.user_count,
                      a.repetition) < std::tuple(static_cast<int>(b.policy),
                                                 static_cast<int>(b.mode), b.user_count,
                                                 b.repetition);
  });
  return table;
}

// Mean and sample deviation per (policy, mode, user_count) over successful reps.
struct AggregateRow {
  Policy policy = Policy::Monolithic;
  ClusteringMode mode = ClusteringMode::Lax;
  int user_count = 0;
  int n_ok = 0;
  int n_failed = 0;
  double delay_mean = 0.0, delay_sd = 0.0;
  double p95_delay_mean = 0.0;
  double cap_rate_mean = 0.0, cap_rate_sd = 0.0;  // fractions in [0,1]
  double mob_rate_mean = 0.0, mob_rate_sd = 0.0;
  double churn_mean = 0.0, churn_sd = 0.0;  // percent
  double nomad_mean = 0.0;
  double reseg_mean = 0.0;
  double generated_mean = 0.0;
  double completed_mean = 0.0;
};

namespace sweep_detail {

inline void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  mean = mean_of(v);
  if (v.size() < 2) {
    sd = 0.0;
    return;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace sweep_detail

inline std::vector<AggregateRow> aggregate(const ResultTable& table) {
  std::vector<AggregateRow> out;
  auto key_of = [](const ResultRow& r) {
    return std::tuple(static_cast<int>(r.policy), static_cast<int>(r.mode), r.user_count);
  };
  std::size_t i = 0;
  while (i < table.rows.size()) {
    std::size_t j = i;
    while (j < table.rows.size() && key_of(table.rows[j]) == key_of(table.rows[i])) ++j;

    AggregateRow agg;
    agg.policy = table.rows[i].policy;
    agg.mode = table.rows[i].mode;
    agg.user_count = table.rows[i].user_count;
    std::vector<double> delay, p95, cap, mob, churn, nomad, reseg, gen, comp;
    for (std::size_t r = i; r < j; ++r) {
      const ResultRow& row = table.rows[r];
      if (!row.error.empty()) {
        ++agg.n_failed;
        continue;
      }
      ++agg.n_ok;
      delay.push_back(row.report.mean_network_delay_ms);
      p95.push_back(row.report.p95_network_delay_ms);
      cap.push_back(row.report.failure_rate_capacity);
      mob.push_back(row.report.failure_rate_mobility);
      churn.push_back(row.report.mean_churn_pct);
      nomad.push_back(row.report.mean_nomad_fraction);
      reseg.push_back(static_cast<double>(row.report.resegmentations));
      gen.push_back(static_cast<double>(row.report.generated));
      comp.push_back(static_cast<double>(row.report.completed));
    }
    sweep_detail::mean_sd(delay, agg.delay_mean, agg.delay_sd);
    agg.p95_delay_mean = mean_of(p95);
    sweep_detail::mean_sd(cap, agg.cap_rate_mean, agg.cap_rate_sd);
    sweep_detail::mean_sd(mob, agg.mob_rate_mean, agg.mob_rate_sd);
    sweep_detail::mean_sd(churn, agg.churn_mean, agg.churn_sd);
    agg.nomad_mean = mean_of(nomad);
    agg.reseg_mean = mean_of(reseg);
    agg.generated_mean = mean_of(gen);
    agg.completed_mean = mean_of(comp);
    out.push_back(agg);
    i = j;
  }
  return out;
}

// Raw per-run table; one row per cell, column order fixed and documented in
// the README.
inline CsvTable results_csv(const ResultTable& table) {
  CsvTable t;
  t.header = {"policy",
              "clustering_mode",
              "user_count",
              "repetition",
              "seed",
              "generated",
              "completed",
              "failed_mobility",
              "failed_capacity",
              "mean_delay_ms",
              "p50_delay_ms",
              "p95_delay_ms",
              "failure_rate_mobility",
              "failure_rate_capacity",
              "mean_churn_pct",
              "mean_nomad_fraction",
              "resegmentations",
              "stress_final",
              "n_subspaces_final",
              "no_events",
              "wall_time_s",
              "error"};
  for (const ResultRow& r : table.rows) {
    const MetricsReport& m = r.report;
    t.rows.push_back({to_string(r.policy), to_string(r.mode), std::to_string(r.user_count),
                      std::to_string(r.repetition), format_u64(r.seed), format_u64(m.generated),
                      format_u64(m.completed), format_u64(m.failed_mobility),
                      format_u64(m.failed_capacity), format_double(m.mean_network_delay_ms),
                      format_double(m.p50_network_delay_ms), format_double(m.p95_network_delay_ms),
                      format_double(m.failure_rate_mobility),
                      format_double(m.failure_rate_capacity), format_double(m.mean_churn_pct),
                      format_double(m.mean_nomad_fraction), std::to_string(m.resegmentations),
                      format_double(m.stress_final), std::to_string(m.n_subspaces_final),
                      m.no_events ? "1" : "0", format_double(m.wall_time_s), r.error});
  }
  return t;
}

inline CsvTable aggregate_csv(const std::vector<AggregateRow>& aggs) {
  CsvTable t;
  t.header = {"policy",        "clustering_mode", "user_count",   "n_ok",
              "n_failed",      "delay_mean_ms",   "delay_sd_ms",  "p95_delay_mean_ms",
              "cap_rate_mean", "cap_rate_sd",     "mob_rate_mean", "mob_rate_sd",
              "churn_mean_pct", "churn_sd_pct",   "nomad_mean",   "reseg_mean",
              "generated_mean", "completed_mean"};
  for (const AggregateRow& a : aggs) {
    t.rows.push_back({to_string(a.policy), to_string(a.mode), std::to_string(a.user_count),
                      std::to_string(a.n_ok), std::to_string(a.n_failed),
                      format_double(a.delay_mean), format_double(a.delay_sd),
                      format_double(a.p95_delay_mean), format_double(a.cap_rate_mean),
                      format_double(a.cap_rate_sd), format_double(a.mob_rate_mean),
                      format_double(a.mob_rate_sd), format_double(a.churn_mean),
                      format_double(a.churn_sd), format_double(a.nomad_mean),
                      format_double(a.reseg_mean), format_double(a.generated_mean),
                      format_double(a.completed_mean)});
  }
  return t;
}

namespace sweep_detail {

inline const AggregateRow& pick(const std::vector<AggregateRow>& aggs, Policy p, ClusteringMode m,
                                int count, const char* figure) {
  for (const auto& a : aggs)
    if (a.policy == p && a.mode == m && a.user_count == count && a.n_ok > 0) return a;
  throw MissingSeries(std::string(figure) + ": no successful runs for policy=" + to_string(p) +
                      " mode=" + to_string(m) + " user_count=" + std::to_string(count));
}

}  // namespace sweep_detail

// The five figure files, each pre-aggregated as mean +/- sd per user count.
// Failure rates are expressed as percentages in these files.
struct FigureFiles {
  CsvTable fig2_network_delay;
  CsvTable fig3_capacity_failures;
  CsvTable fig4_mobility_failures;
  CsvTable fig5_churn_layering;
  CsvTable fig6_churn_clustering;
};

inline FigureFiles figure_files(const ResultTable& table, const std::vector<int>& user_counts) {
  using sweep_detail::pick;
  std::vector<AggregateRow> aggs = aggregate(table);
  FigureFiles f;

  f.fig2_network_delay.header = {"user_count",       "monolithic_mean", "monolithic_sd",
                                 "single_layer_mean", "single_layer_sd", "dual_layer_mean",
                                 "dual_layer_sd"};
  f.fig3_capacity_failures.header = {"user_count",           "monolithic_pct",
                                     "monolithic_sd_pct",    "single_layer_pct",
                                     "single_layer_sd_pct",  "dual_layer_pct",
                                     "dual_layer_sd_pct"};
  f.fig4_mobility_failures.header = f.fig3_capacity_failures.header;
  f.fig5_churn_layering.header = {"user_count", "single_layer_mean_pct", "single_layer_sd_pct",
                                  "dual_layer_mean_pct", "dual_layer_sd_pct"};
  f.fig6_churn_clustering.header = {"user_count", "lax_mean_pct", "lax_sd_pct", "strict_mean_pct",
                                    "strict_sd_pct"};

  for (int count : user_counts) {
    const auto& mono = pick(aggs, Policy::Monolithic, ClusteringMode::Lax, count, "fig2");
    const auto& single = pick(aggs, Policy::SingleLayer, ClusteringMode::Lax, count, "fig2");
    const auto& dual = pick(aggs, Policy::DualLayer, ClusteringMode::Lax, count, "fig2");
    const auto& dual_strict =
        pick(aggs, Policy::DualLayer, ClusteringMode::Strict, count, "fig6");

    f.fig2_network_delay.rows.push_back(
        {std::to_string(count), format_double(mono.delay_mean), format_double(mono.delay_sd),
         format_double(single.delay_mean), format_double(single.delay_sd),
         format_double(dual.delay_mean), format_double(dual.delay_sd)});
    f.fig3_capacity_failures.rows.push_back(
        {std::to_string(count), format_double(100.0 * mono.cap_rate_mean),
         format_double(100.0 * mono.cap_rate_sd), format_double(100.0 * single.cap_rate_mean),
         format_double(100.0 * single.cap_rate_sd), format_double(100.0 * dual.cap_rate_mean),
         format_double(100.0 * dual.cap_rate_sd)});
    f.fig4_mobility_failures.rows.push_back(
        {std::to_string(count), format_double(100.0 * mono.mob_rate_mean),
         format_double(100.0 * mono.mob_rate_sd), format_double(100.0 * single.mob_rate_mean),
         format_double(100.0 * single.mob_rate_sd), format_double(100.0 * dual.mob_rate_mean),
         format_double(100.0 * dual.mob_rate_sd)});
    f.fig5_churn_layering.rows.push_back(
        {std::to_string(count), format_double(single.churn_mean), format_double(single.churn_sd),
         format_double(dual.churn_mean), format_double(dual.churn_sd)});
    f.fig6_churn_clustering.rows.push_back(
        {std::to_string(count), format_double(dual.churn_mean), format_double(dual.churn_sd),
         format_double(dual_strict.churn_mean), format_double(dual_strict.churn_sd)});
  }
  return f;
}

inline void write_figure_files(const FigureFiles& f, const std::string& dir) {
  write_csv(dir + "/fig2_network_delay.csv", f.fig2_network_delay);
  write_csv(dir + "/fig3_capacity_failures.csv", f.fig3_capacity_failures);
  write_csv(dir + "/fig4_mobility_failures.csv", f.fig4_mobility_failures);
  write_csv(dir + "/fig5_churn_layering.csv", f.fig5_churn_layering);
  write_csv(dir + "/fig6_churn_clustering.csv", f.fig6_churn_clustering);
}

}  // namespace edgeseg
