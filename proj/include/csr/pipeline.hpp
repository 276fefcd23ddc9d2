#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "csr/catalog.hpp"
#include "csr/contextual.hpp"
#include "csr/relational.hpp"
#include "csr/similarity.hpp"
#include "csr/structural.hpp"

namespace csr {

enum class ScopeCombine { union_of, intersection_of };

struct ScheduleStep {
  std::size_t k = 1;  // chunks
  std::size_t l = 1;  // triplets
  std::size_t h = 1;  // entities; only the final step's value is used

  bool operator==(const ScheduleStep&) const = default;
};

struct IterationSchedule {
  std::vector<ScheduleStep> steps;
  ScopeCombine combine = ScopeCombine::union_of;

  /// At least one step; k and l non-increasing; all values >= 1.
  void validate() const;
  bool operator==(const IterationSchedule&) const = default;
};

nlohmann::json to_json(const IterationSchedule& schedule);
IterationSchedule schedule_from_json(const nlohmann::json& j);

/// Three steps whose k and l shrink geometrically from a size-dependent start; final h is
/// 2 * relevant_bound.
IterationSchedule default_schedule(std::size_t catalog_size, std::size_t relevant_bound = 10);

struct PipelineConfig {
  SimilarityConfig similarity;
  EntityOperator op = EntityOperator::concat_names;
  WeightMode weight_mode = WeightMode::uniform;
  IterationSchedule schedule;  // empty means default_schedule(catalog size)
  ScopeMode contextual_scope = ScopeMode::intersect_output;
  std::vector<std::string> unavailable_tables;
  bool parallel_stages = true;
};

nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct StageTrace {
  std::size_t iteration = 0;  // 1-based
  TableSet contextual;
  TableSet structural;
  TableSet scope;

  bool operator==(const StageTrace&) const = default;
};

/// Wall-clock microseconds per stage, summed over iterations.
struct StageTimings {
  std::int64_t contextual_us = 0;
  std::int64_t structural_us = 0;
  std::int64_t relational_us = 0;
  std::int64_t total_us = 0;

  std::map<std::string, double> as_millis() const;
};

struct RetrievalOutput {
  std::vector<SemanticEntity> entities;
  TableSet tables;
  std::vector<StageTrace> per_stage;
  StageTimings timings;
};

/// Everything but timings, for byte-level comparison of outputs.
nlohmann::json to_json(const RetrievalOutput& output, const SchemaCatalog& catalog);

class ScopeCollapsedError : public std::runtime_error {
 public:
  explicit ScopeCollapsedError(std::size_t step)
      : std::runtime_error("scope collapsed at iteration " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

struct PipelineInputs {
  const SchemaCatalog& catalog;
  const ChunkIndex& chunks;
  const KnowledgeGraph& graph;
};

RankingConfig ranking_config(const PipelineConfig& config, const SchemaCatalog& catalog, std::size_t h);

/// Iterates the schedule: contextual and structural retrieval (concurrently when
/// config.parallel_stages) within the previous scope, combine, then hypergraph ranking on
/// the final scope. Throws ScopeCollapsedError when a combined scope is empty.
RetrievalOutput run_pipeline(std::string_view question, const PipelineInputs& inputs,
                             const IterationSchedule& schedule, const PipelineConfig& config);

}  // namespace csr
