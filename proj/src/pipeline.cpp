#include "csr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>

#include <omp.h>

namespace csr {

void IterationSchedule::validate() const {
  if (steps.empty()) throw std::invalid_argument("iteration schedule needs at least one step");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const ScheduleStep& s = steps[i];
    if (s.k == 0 || s.l == 0 || s.h == 0) {
      throw std::invalid_argument("schedule step " + std::to_string(i + 1) + ": k, l, h must be >= 1");
    }
    if (i > 0 && (s.k > steps[i - 1].k || s.l > steps[i - 1].l)) {
      throw std::invalid_argument("schedule step " + std::to_string(i + 1) +
                                  ": k and l must be non-increasing across steps");
    }
  }
}

nlohmann::json to_json(const IterationSchedule& schedule) {
  nlohmann::json steps = nlohmann::json::array();
  for (const ScheduleStep& s : schedule.steps) steps.push_back({{"k", s.k}, {"l", s.l}, {"h", s.h}});
  return {{"steps", std::move(steps)},
          {"scope_combine", schedule.combine == ScopeCombine::union_of ? "union" : "intersection"}};
}

IterationSchedule schedule_from_json(const nlohmann::json& j) {
  IterationSchedule s;
  for (const auto& step : j.at("steps")) {
    if (step.is_array()) {
      s.steps.push_back({step.at(0).get<std::size_t>(), step.at(1).get<std::size_t>(),
                         step.at(2).get<std::size_t>()});
    } else {
      s.steps.push_back({step.at("k").get<std::size_t>(), step.at("l").get<std::size_t>(),
                         step.at("h").get<std::size_t>()});
    }
  }
  const std::string combine = j.value("scope_combine", "union");
  if (combine == "union") s.combine = ScopeCombine::union_of;
  else if (combine == "intersection") s.combine = ScopeCombine::intersection_of;
  else throw std::invalid_argument("unknown scope_combine '" + combine + "'");
  s.validate();
  return s;
}

IterationSchedule default_schedule(std::size_t catalog_size, std::size_t relevant_bound) {
  const double n = static_cast<double>(std::max<std::size_t>(catalog_size, 1));
  auto at_least_one = [](double x) { return static_cast<std::size_t>(std::max(1.0, std::round(x))); };
  const std::size_t k1 = at_least_one(std::sqrt(n) * 1.6);
  const std::size_t l1 = at_least_one(std::sqrt(n) * 1.2);
  IterationSchedule s;
  s.steps = {{k1, l1, 1},
             {at_least_one(static_cast<double>(k1) / 2.0), at_least_one(static_cast<double>(l1) / 2.0), 1},
             {at_least_one(static_cast<double>(k1) / 4.0), at_least_one(static_cast<double>(l1) / 4.0),
              std::max<std::size_t>(1, 2 * relevant_bound)}};
  for (auto& step : s.steps) step.h = s.steps.back().h;
  return s;
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["similarity"] = to_json(c.similarity);
  j["ranking"] = {
      {"operator", c.op == EntityOperator::concat_names ? "concat_names" : "concat_with_descriptions"},
      {"weight_mode", c.weight_mode == WeightMode::uniform ? "uniform" : "hyperedge_degree"}};
  if (!c.schedule.steps.empty()) j["schedule"] = to_json(c.schedule);
  j["contextual_scope"] = c.contextual_scope == ScopeMode::intersect_output ? "intersect_output" : "filter_chunks";
  j["unavailable_tables"] = c.unavailable_tables;
  j["parallel_stages"] = c.parallel_stages;
  return j;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (j.contains("similarity")) c.similarity = similarity_config_from_json(j.at("similarity"));
  if (j.contains("ranking")) {
    const auto& r = j.at("ranking");
    const std::string op = r.value("operator", "concat_names");
    if (op == "concat_names") c.op = EntityOperator::concat_names;
    else if (op == "concat_with_descriptions") c.op = EntityOperator::concat_with_descriptions;
    else throw std::invalid_argument("unknown ranking operator '" + op + "'");
    const std::string wm = r.value("weight_mode", "uniform");
    if (wm == "uniform") c.weight_mode = WeightMode::uniform;
    else if (wm == "hyperedge_degree") c.weight_mode = WeightMode::hyperedge_degree;
    else throw std::invalid_argument("unknown weight_mode '" + wm + "'");
  }
  if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
  const std::string mode = j.value("contextual_scope", "intersect_output");
  if (mode == "intersect_output") c.contextual_scope = ScopeMode::intersect_output;
  else if (mode == "filter_chunks") c.contextual_scope = ScopeMode::filter_chunks;
  else throw std::invalid_argument("unknown contextual_scope '" + mode + "'");
  c.unavailable_tables = j.value("unavailable_tables", std::vector<std::string>{});
  c.parallel_stages = j.value("parallel_stages", true);
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  try {
    return pipeline_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::map<std::string, double> StageTimings::as_millis() const {
  return {{"contextual", static_cast<double>(contextual_us) / 1000.0},
          {"structural", static_cast<double>(structural_us) / 1000.0},
          {"relational", static_cast<double>(relational_us) / 1000.0},
          {"total", static_cast<double>(total_us) / 1000.0}};
}

namespace {

nlohmann::json table_names(const TableSet& tables, const SchemaCatalog& catalog) {
  nlohmann::json out = nlohmann::json::array();
  for (TableId t : tables) out.push_back(catalog.table(t).name);
  return out;
}

using Clock = std::chrono::steady_clock;

std::int64_t micros_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count();
}

}  // namespace

nlohmann::json to_json(const RetrievalOutput& output, const SchemaCatalog& catalog) {
  nlohmann::json entities = nlohmann::json::array();
  for (const SemanticEntity& e : output.entities) {
    entities.push_back({{"entity", catalog.table(e.table).name + "." + catalog.column(e.column).name},
                        {"surface", e.surface},
                        {"score", e.score}});
  }
  nlohmann::json stages = nlohmann::json::array();
  for (const StageTrace& s : output.per_stage) {
    stages.push_back({{"iteration", s.iteration},
                      {"contextual", table_names(s.contextual, catalog)},
                      {"structural", table_names(s.structural, catalog)},
                      {"scope", table_names(s.scope, catalog)}});
  }
  return {{"entities", std::move(entities)},
          {"tables", table_names(output.tables, catalog)},
          {"per_stage", std::move(stages)}};
}

RankingConfig ranking_config(const PipelineConfig& config, const SchemaCatalog& catalog, std::size_t h) {
  RankingConfig rc;
  rc.h = h;
  rc.op = config.op;
  rc.weight_mode = config.weight_mode;
  for (const std::string& name : config.unavailable_tables) {
    auto t = catalog.lookup_table(name);
    if (!t) throw std::invalid_argument("unavailable_tables names unknown table '" + name + "'");
    rc.unavailable.insert(*t);
  }
  return rc;
}

RetrievalOutput run_pipeline(std::string_view question, const PipelineInputs& inputs,
                             const IterationSchedule& schedule, const PipelineConfig& config) {
  schedule.validate();
  const auto start = Clock::now();
  const RankingConfig rc = ranking_config(config, inputs.catalog, schedule.steps.back().h);

  RetrievalOutput out;
  TableSet scope;
  for (std::size_t i = 0; i < schedule.steps.size(); ++i) {
    const ScheduleStep& step = schedule.steps[i];
    const TableSet* restrict_to = i == 0 ? nullptr : &scope;

    ContextualResult contextual;
    StructuralResult structural;
    std::int64_t contextual_us = 0;
    std::int64_t structural_us = 0;
    std::exception_ptr contextual_error;
    std::exception_ptr structural_error;

    auto run_contextual = [&] {
      const auto t0 = Clock::now();
      try {
        contextual = retrieve_contextual(inputs.chunks, question, step.k, restrict_to, config.contextual_scope);
      } catch (...) {
        contextual_error = std::current_exception();
      }
      contextual_us = micros_since(t0);
    };
    auto run_structural = [&] {
      const auto t0 = Clock::now();
      try {
        structural = retrieve_structural(inputs.graph, question, step.l, restrict_to);
      } catch (...) {
        structural_error = std::current_exception();
      }
      structural_us = micros_since(t0);
    };

    if (config.parallel_stages) {
#pragma omp parallel sections num_threads(2)
      {
#pragma omp section
        run_contextual();
#pragma omp section
        run_structural();
      }
    } else {
      run_contextual();
      run_structural();
    }
    if (contextual_error) std::rethrow_exception(contextual_error);
    if (structural_error) std::rethrow_exception(structural_error);
    out.timings.contextual_us += contextual_us;
    out.timings.structural_us += structural_us;

    TableSet combined;
    if (schedule.combine == ScopeCombine::union_of) {
      std::set_union(contextual.tables.begin(), contextual.tables.end(), structural.tables.begin(),
                     structural.tables.end(), std::inserter(combined, combined.end()));
    } else {
      std::set_intersection(contextual.tables.begin(), contextual.tables.end(), structural.tables.begin(),
                            structural.tables.end(), std::inserter(combined, combined.end()));
    }
    out.per_stage.push_back({i + 1, std::move(contextual.tables), std::move(structural.tables), combined});
    if (combined.empty()) throw ScopeCollapsedError(i + 1);
    scope = std::move(combined);
  }

  const auto t0 = Clock::now();
  const Hypergraph graph = build_hypergraph(scope, inputs.catalog, rc);
  out.entities = hypergraph_rank(graph, inputs.catalog, question, rc, inputs.graph.embedder());
  out.timings.relational_us = micros_since(t0);
  for (const SemanticEntity& e : out.entities) out.tables.insert(e.table);
  out.timings.total_us = micros_since(start);
  return out;
}

}  // namespace csr
