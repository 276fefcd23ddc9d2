#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "csr/catalog.hpp"
#include "csr/contextual.hpp"
#include "csr/pipeline.hpp"

namespace csr {

// ---------------------------------------------------------------------------------------------
// Metrics

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t true_pos = 0;
  std::size_t false_pos = 0;
  std::size_t false_neg = 0;
};

/// Set precision/recall. An empty prediction against an empty truth scores 1/1;
/// any other zero denominator scores 0.
Metrics precision_recall(const TableSet& predicted, const TableSet& truth);

/// Nearest-rank percentile: sorted[ceil(p/100 * n) - 1], rank clamped to [1, n].
double percentile_nearest_rank(std::vector<double> samples, double p);

// ---------------------------------------------------------------------------------------------
// Synthetic workloads

struct GeneratorProfile {
  std::size_t table_count = 246;
  std::size_t column_count = 0;  // exact total when nonzero, else table_count * columns_per_table_mean
  double columns_per_table_mean = 12.28;
  double fk_median_target = 7.5;
  double tables_per_query_p_ge7 = 0.25;
  double tables_per_query_stddev = 3.3;
  std::size_t max_tables_per_query = 24;
  std::size_t query_count = 500;
  std::size_t questions_per_intent = 4;  // mean paraphrases per relevant-set pattern
  double description_coverage = 0.7;     // fraction of tables/columns carrying descriptions
  std::uint64_t seed = 20250101;

  void validate() const;
};

nlohmann::json to_json(const GeneratorProfile& profile);
GeneratorProfile generator_profile_from_json(const nlohmann::json& j);

/// Default enterprise-like profile (246 tables, 500 queries).
GeneratorProfile enterprise_profile(std::uint64_t seed = 20250101);
/// Profiles with the exact table/column totals of the four experimental groups (1..4).
GeneratorProfile group_profile(int group, std::uint64_t seed = 20250101);

struct SyntheticWorkload {
  SchemaCatalog catalog;
  std::vector<TracePair> trace;
  std::vector<TableSet> planted;  // relevant tables per trace entry
};

/// Seeded and deterministic. Throws std::invalid_argument for infeasible profiles.
SyntheticWorkload generate_synthetic(const GeneratorProfile& profile);

/// Probability mass over relevant-set sizes 1..max used by the generator: geometric body on
/// 1..6 and a geometric tail on 7..max whose decay is solved to hit the target stddev.
std::vector<double> relevant_size_pmf(const GeneratorProfile& profile);

// ---------------------------------------------------------------------------------------------
// Sweeps

struct TraceSplit {
  std::vector<TracePair> index;
  std::vector<TracePair> held_out;
};

/// Seeded shuffle then split; the held-out fraction is rounded and at least one question.
TraceSplit split_trace(std::span<const TracePair> trace, double held_out_fraction, std::uint64_t seed);

struct SweepRow {
  std::string group;
  std::size_t schedule_id = 0;
  std::size_t iteration = 0;
  ScheduleStep step;
  Metrics metrics;  // precision/recall are averages over the evaluated questions
};

struct SweepOptions {
  std::string group = "custom";
  double held_out_fraction = 0.2;
  std::uint64_t seed = 7;
};

/// Builds indexes from the index split and evaluates every held-out question under every
/// schedule. Rows for iterations before the last score the combined scope; the last row
/// scores the tables of the ranked entities.
std::vector<SweepRow> run_sweep(const SchemaCatalog& catalog, std::span<const TracePair> trace,
                                std::span<const IterationSchedule> schedules, const PipelineConfig& config,
                                const SweepOptions& options);

/// Same evaluation over prebuilt indexes and an explicit held-out set. Questions whose text
/// matches a chunk question are rejected, so no question sees its own chunk.
std::vector<SweepRow> evaluate_schedules(const PipelineInputs& inputs, std::span<const TracePair> held_out,
                                         std::span<const IterationSchedule> schedules,
                                         const PipelineConfig& config, const std::string& group);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

/// Schedules covered by the default sweep for a catalog of the given size.
std::vector<IterationSchedule> sweep_schedules(std::size_t catalog_size, std::size_t chunk_count,
                                               std::size_t triplet_count);

// ---------------------------------------------------------------------------------------------
// Latency

struct LatencyReport {
  double p50_ms = 0.0;
  double p90_ms = 0.0;
  double p99_ms = 0.0;
  double mean_ms = 0.0;
  std::map<std::string, double> per_stage_means_ms;
  std::size_t sample_count = 0;
};

nlohmann::json to_json(const LatencyReport& report);

/// Times `run` once per sample, cycling through `questions`; `run` returns per-stage timings.
LatencyReport measure_latency(const std::function<StageTimings(const std::string&)>& run,
                              std::span<const std::string> questions, std::size_t repetitions,
                              std::size_t warmup = 5);

LatencyReport latency_bench(const PipelineInputs& inputs, std::span<const std::string> questions,
                            const IterationSchedule& schedule, const PipelineConfig& config,
                            std::size_t repetitions);

}  // namespace csr
