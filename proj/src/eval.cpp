#include "csr/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "rng.hpp"

namespace csr {

Metrics precision_recall(const TableSet& predicted, const TableSet& truth) {
  Metrics m;
  for (TableId t : predicted) {
    if (truth.count(t)) ++m.true_pos;
    else ++m.false_pos;
  }
  m.false_neg = truth.size() - m.true_pos;
  if (predicted.empty() && truth.empty()) {
    m.precision = 1.0;
    m.recall = 1.0;
    return m;
  }
  m.precision = predicted.empty() ? 0.0 : static_cast<double>(m.true_pos) / static_cast<double>(predicted.size());
  m.recall = truth.empty() ? 0.0 : static_cast<double>(m.true_pos) / static_cast<double>(truth.size());
  return m;
}

double percentile_nearest_rank(std::vector<double> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw std::invalid_argument("percentile must be in (0, 100]");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  return samples[rank - 1];
}

TraceSplit split_trace(std::span<const TracePair> trace, double held_out_fraction, std::uint64_t seed) {
  if (trace.size() < 2) throw std::invalid_argument("split_trace: need at least two trace entries");
  if (!(held_out_fraction > 0.0 && held_out_fraction < 1.0)) {
    throw std::invalid_argument("split_trace: held-out fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(trace.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  auto held = static_cast<std::size_t>(std::llround(held_out_fraction * static_cast<double>(trace.size())));
  held = std::clamp<std::size_t>(held, 1, trace.size() - 1);
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
  TraceSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < held ? split.held_out : split.index).push_back(trace[order[i]]);
  }
  return split;
}

std::vector<SweepRow> evaluate_schedules(const PipelineInputs& inputs, std::span<const TracePair> held_out,
                                         std::span<const IterationSchedule> schedules,
                                         const PipelineConfig& config, const std::string& group) {
  std::unordered_set<std::string> indexed;
  for (const Chunk& c : inputs.chunks.chunks()) indexed.insert(c.question);
  std::vector<TableSet> truth;
  for (const TracePair& p : held_out) {
    if (indexed.count(p.question)) {
      throw std::invalid_argument("held-out question also present in the chunk index: " + p.question);
    }
    truth.push_back(label_trace_pair(p, inputs.catalog).tables);
  }

  std::vector<SweepRow> rows;
  for (std::size_t si = 0; si < schedules.size(); ++si) {
    const IterationSchedule& schedule = schedules[si];
    schedule.validate();
    const std::size_t steps = schedule.steps.size();
    // per_question[q][i]: metrics at iteration i
    std::vector<std::vector<Metrics>> per_question(held_out.size(), std::vector<Metrics>(steps));
    const auto nq = static_cast<std::int64_t>(held_out.size());
    PipelineConfig sequential = config;
    sequential.parallel_stages = false;

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t q = 0; q < nq; ++q) {
      std::vector<TableSet> predicted(steps);
      try {
        RetrievalOutput out = run_pipeline(held_out[q].question, inputs, schedule, sequential);
        for (std::size_t i = 0; i + 1 < steps; ++i) predicted[i] = out.per_stage[i].scope;
        predicted[steps - 1] = out.tables;
      } catch (const ScopeCollapsedError& e) {
        // A collapsed run predicts nothing at any iteration.
        (void)e;
      }
      for (std::size_t i = 0; i < steps; ++i) per_question[q][i] = precision_recall(predicted[i], truth[q]);
    }

    for (std::size_t i = 0; i < steps; ++i) {
      SweepRow row;
      row.group = group;
      row.schedule_id = si;
      row.iteration = i + 1;
      row.step = schedule.steps[i];
      double p = 0.0, r = 0.0;
      for (const auto& qm : per_question) {
        p += qm[i].precision;
        r += qm[i].recall;
        row.metrics.true_pos += qm[i].true_pos;
        row.metrics.false_pos += qm[i].false_pos;
        row.metrics.false_neg += qm[i].false_neg;
      }
      const double n = std::max<double>(1.0, static_cast<double>(per_question.size()));
      row.metrics.precision = p / n;
      row.metrics.recall = r / n;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<SweepRow> run_sweep(const SchemaCatalog& catalog, std::span<const TracePair> trace,
                                std::span<const IterationSchedule> schedules, const PipelineConfig& config,
                                const SweepOptions& options) {
  const TraceSplit split = split_trace(trace, options.held_out_fraction, options.seed);
  const ChunkIndex chunks = build_chunk_index(split.index, catalog, config.similarity);
  const KnowledgeGraph graph = build_knowledge_graph(catalog, config.similarity);
  return evaluate_schedules({catalog, chunks, graph}, split.held_out, schedules, config, options.group);
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "group,schedule_id,iteration,k,l,h,precision,recall\n";
  const auto flags = out.flags();
  out << std::fixed << std::setprecision(6);
  for (const SweepRow& r : rows) {
    out << r.group << ',' << r.schedule_id << ',' << r.iteration << ',' << r.step.k << ',' << r.step.l << ','
        << r.step.h << ',' << r.metrics.precision << ',' << r.metrics.recall << '\n';
  }
  out.flags(flags);
}

std::vector<IterationSchedule> sweep_schedules(std::size_t catalog_size, std::size_t chunk_count,
                                               std::size_t triplet_count) {
  auto clamp_k = [&](std::size_t k) { return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(chunk_count, 1)); };
  auto clamp_l = [&](std::size_t l) { return std::clamp<std::size_t>(l, 1, std::max<std::size_t>(triplet_count, 1)); };
  const IterationSchedule base = default_schedule(catalog_size);
  const std::size_t h = base.steps.back().h;

  std::vector<IterationSchedule> out;
  const std::size_t k1 = base.steps.front().k;
  const std::size_t l1 = base.steps.front().l;
  for (const double scale : {2.0, 1.0, 0.5}) {
    IterationSchedule s;
    const auto k = static_cast<double>(k1) * scale;
    const auto l = static_cast<double>(l1) * scale;
    for (const double shrink : {1.0, 0.5, 0.25}) {
      s.steps.push_back({clamp_k(static_cast<std::size_t>(std::max(1.0, std::round(k * shrink)))),
                         clamp_l(static_cast<std::size_t>(std::max(1.0, std::round(l * shrink)))), h});
    }
    out.push_back(std::move(s));
  }
  return out;
}

nlohmann::json to_json(const LatencyReport& r) {
  return {{"p50_ms", r.p50_ms},   {"p90_ms", r.p90_ms},
          {"p99_ms", r.p99_ms},   {"mean_ms", r.mean_ms},
          {"per_stage_means_ms", r.per_stage_means_ms}, {"sample_count", r.sample_count}};
}

LatencyReport measure_latency(const std::function<StageTimings(const std::string&)>& run,
                              std::span<const std::string> questions, std::size_t repetitions,
                              std::size_t warmup) {
  if (questions.empty()) throw std::invalid_argument("latency: no questions");
  if (repetitions == 0) throw std::invalid_argument("latency: repetitions must be >= 1");
  for (std::size_t i = 0; i < warmup; ++i) run(questions[i % questions.size()]);

  using Clock = std::chrono::steady_clock;
  std::vector<double> samples;
  samples.reserve(repetitions);
  std::map<std::string, double> stage_sums;
  for (std::size_t i = 0; i < repetitions; ++i) {
    const auto t0 = Clock::now();
    const StageTimings timings = run(questions[i % questions.size()]);
    samples.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    for (const auto& [stage, ms] : timings.as_millis()) stage_sums[stage] += ms;
  }

  LatencyReport r;
  r.sample_count = samples.size();
  r.p50_ms = percentile_nearest_rank(samples, 50);
  r.p90_ms = percentile_nearest_rank(samples, 90);
  r.p99_ms = percentile_nearest_rank(samples, 99);
  r.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  for (const auto& [stage, sum] : stage_sums) r.per_stage_means_ms[stage] = sum / static_cast<double>(repetitions);
  return r;
}

LatencyReport latency_bench(const PipelineInputs& inputs, std::span<const std::string> questions,
                            const IterationSchedule& schedule, const PipelineConfig& config,
                            std::size_t repetitions) {
  if (repetitions < 30) throw std::invalid_argument("latency_bench: repetitions must be >= 30");
  return measure_latency(
      [&](const std::string& q) {
        try {
          return run_pipeline(q, inputs, schedule, config).timings;
        } catch (const ScopeCollapsedError&) {
          return StageTimings{};
        }
      },
      questions, repetitions);
}

}  // namespace csr
