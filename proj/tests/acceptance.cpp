// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion; exits nonzero on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "csr/eval.hpp"
#include "csr/pipeline.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace csr;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

bool same_contextual(const ContextualResult& a, const ContextualResult& b) {
  return a.ranked_chunks == b.ranked_chunks && a.tables == b.tables;
}

bool same_structural(const StructuralResult& a, const StructuralResult& b) {
  return a.ranked_triplets == b.ranked_triplets && a.tables == b.tables;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  test::RandomSchema gen(1001);
  constexpr int kCases = 500;
  int bad_c = 0, bad_s = 0, bad_h = 0;
  for (int i = 0; i < kCases; ++i) {
    const SchemaCatalog catalog = gen.catalog(20);
    const auto trace = gen.trace(catalog, 32);
    SimilarityConfig cfg;
    cfg.metric = gen.coin() ? Metric::cosine : Metric::bm25;
    cfg.dimension = gen.coin() ? 1024 : 64;
    const ChunkIndex chunks = build_chunk_index(trace, catalog, cfg);
    const KnowledgeGraph graph = build_knowledge_graph(catalog, cfg);
    // Questions reuse chunk text half the time so exact matches and ties both occur.
    const std::string q = gen.coin() ? trace[gen.uniform(0, trace.size() - 1)].question : gen.phrase(gen.uniform(0, 6));
    const TableSet scope = gen.scope(catalog);
    const TableSet* sp = gen.coin(0.6) ? &scope : nullptr;
    const ScopeMode mode = gen.coin() ? ScopeMode::intersect_output : ScopeMode::filter_chunks;

    const std::size_t k = gen.uniform(1, chunks.size() + 2);
    bad_c += !same_contextual(retrieve_contextual(chunks, q, k, sp, mode), oracle::contextual(chunks, q, k, sp, mode));

    const std::size_t l = gen.uniform(1, graph.size() + 2);
    bad_s += !same_structural(retrieve_structural(graph, q, l, sp), oracle::structural(graph, q, l, sp));

    RankingConfig rc;
    rc.h = gen.uniform(1, catalog.column_count() + 2);
    rc.op = gen.coin() ? EntityOperator::concat_names : EntityOperator::concat_with_descriptions;
    rc.weight_mode = gen.coin() ? WeightMode::uniform : WeightMode::hyperedge_degree;
    for (TableId t : scope) {
      if (gen.coin(0.2)) rc.unavailable.insert(t);
    }
    const auto got = hypergraph_rank(build_hypergraph(scope, catalog, rc), catalog, q, rc, graph.embedder());
    bad_h += got != oracle::rank_scope(scope, catalog, q, rc, graph.embedder());
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = bad_c == 0 && bad_s == 0 && bad_h == 0 && secs < 60.0;
  o.detail = std::to_string(kCases) + " cases each; mismatches contextual=" + std::to_string(bad_c) +
             " structural=" + std::to_string(bad_s) + " hypergraph=" + std::to_string(bad_h) + "; " +
             fmt("%.1fs", secs);
  return o;
}

Outcome criterion2() {
  test::RandomSchema gen(2002);
  constexpr int kGraphs = 1000;
  int bad = 0;
  std::size_t zero_weight = 0, skipped = 0;
  for (int i = 0; i < kGraphs; ++i) {
    const SchemaCatalog catalog = gen.catalog(12);
    const KnowledgeGraph kg = build_knowledge_graph(catalog, {});
    Hypergraph g;
    for (TableId t : gen.scope(catalog)) g.nodes.push_back(t);
    // Arbitrary hyperedges over the nodes' columns, not only join keys.
    std::vector<std::pair<TableId, ColumnId>> pool;
    for (TableId t : g.nodes) {
      for (const Column& c : catalog.table(t).columns) pool.emplace_back(t, c.id);
    }
    std::shuffle(pool.begin(), pool.end(), gen.rng);
    pool.resize(gen.uniform(1, pool.size()));
    while (!pool.empty()) {
      Hyperedge e;
      const std::size_t take = std::min(pool.size(), gen.uniform(1, 4));
      e.members.assign(pool.end() - static_cast<std::ptrdiff_t>(take), pool.end());
      pool.resize(pool.size() - take);
      std::sort(e.members.begin(), e.members.end());
      e.key = normalize_key(catalog.column(e.members.front().second).name);
      g.hyperedges.push_back(std::move(e));
    }
    for (TableId t : g.nodes) {
      const std::size_t pick = gen.uniform(0, 4);
      const double w = pick == 0 ? 0.0 : pick == 1 ? -1.5 : pick == 2 ? 1.0 : 0.25 + static_cast<double>(gen.uniform(0, 40)) / 10.0;
      g.weights[t] = w;
      zero_weight += w <= 0.0;
      if (gen.coin(0.8)) {
        g.availability[t] = gen.coin(0.8);
        skipped += !g.availability[t];
      }
    }
    RankingConfig rc;
    rc.h = gen.uniform(1, 30);
    rc.op = gen.coin() ? EntityOperator::concat_names : EntityOperator::concat_with_descriptions;
    const std::string q = gen.phrase(gen.uniform(0, 5));
    const auto got = hypergraph_rank(g, catalog, q, rc, kg.embedder());
    const auto want =
        oracle::ranking_loop(rc.h, g.nodes, g.hyperedges, rc.op, g.weights, g.availability, catalog, q, kg.embedder());
    bad += got != want;
  }
  Outcome o;
  o.pass = bad == 0;
  o.detail = std::to_string(kGraphs) + " random hypergraphs; mismatches=" + std::to_string(bad) +
             "; nodes with w<=0: " + std::to_string(zero_weight) + ", unavailable: " + std::to_string(skipped);
  return o;
}

Outcome criterion3() {
  const std::size_t expected[] = {701, 1486, 2567, 3021};
  Outcome o;
  for (int g = 1; g <= 4; ++g) {
    const SyntheticWorkload w = generate_synthetic(group_profile(g));
    const KnowledgeGraph kg = build_knowledge_graph(w.catalog, {});
    const bool ok = kg.size() == expected[g - 1] && kg.size() == w.catalog.column_count();
    o.pass = o.pass && ok;
    o.detail += "group" + std::to_string(g) + "=" + std::to_string(kg.size()) + (ok ? " " : "(!) ");
  }
  return o;
}

Outcome criterion4() {
  std::mt19937_64 rng(4004);
  struct Fixture {
    std::string name;
    SchemaCatalog catalog;
    std::vector<TracePair> trace;
  };
  std::vector<Fixture> fixtures;
  fixtures.push_back({"shop", test::shop_catalog(), test::shop_trace()});
  for (int g = 1; g <= 4; ++g) {
    SyntheticWorkload w = generate_synthetic(group_profile(g));
    fixtures.push_back({"group" + std::to_string(g), std::move(w.catalog), std::move(w.trace)});
  }

  std::size_t questions = 0, runs = 0, chain_breaks = 0, collapsed = 0, recall_misses = 0;
  for (const Fixture& f : fixtures) {
    const ChunkIndex chunks = build_chunk_index(f.trace, f.catalog, {});
    const KnowledgeGraph graph = build_knowledge_graph(f.catalog, {});
    const PipelineInputs inputs{f.catalog, chunks, graph};

    std::vector<IterationSchedule> schedules = {default_schedule(f.catalog.table_count())};
    for (int s = 0; s < 6; ++s) {
      IterationSchedule sched;
      sched.combine = s % 3 == 2 ? ScopeCombine::intersection_of : ScopeCombine::union_of;
      std::size_t k = 1 + rng() % chunks.size(), l = 1 + rng() % graph.size();
      const std::size_t steps = 2 + rng() % 3;
      for (std::size_t i = 0; i < steps; ++i) {
        sched.steps.push_back({k, l, 1 + rng() % 40});
        k = std::max<std::size_t>(1, k - rng() % (k + 1));
        l = std::max<std::size_t>(1, l - rng() % (l + 1));
      }
      schedules.push_back(sched);
    }
    const IterationSchedule everything{{{chunks.size(), graph.size(), f.catalog.column_count()},
                                        {chunks.size(), graph.size(), f.catalog.column_count()}},
                                       ScopeCombine::union_of};

    const std::size_t per_fixture = std::min<std::size_t>(f.trace.size(), 50);
    for (std::size_t qi = 0; qi < per_fixture; ++qi) {
      const TracePair& p = f.trace[rng() % f.trace.size()];
      ++questions;
      for (const IterationSchedule& sched : schedules) {
        ++runs;
        try {
          const RetrievalOutput out = run_pipeline(p.question, inputs, sched, {});
          for (std::size_t i = 1; i < out.per_stage.size(); ++i) {
            const TableSet& prev = out.per_stage[i - 1].scope;
            const TableSet& cur = out.per_stage[i].scope;
            chain_breaks += !std::includes(prev.begin(), prev.end(), cur.begin(), cur.end());
          }
          const TableSet& last = out.per_stage.back().scope;
          chain_breaks += !std::includes(last.begin(), last.end(), out.tables.begin(), out.tables.end());
        } catch (const ScopeCollapsedError&) {
          ++collapsed;
        }
      }
      const TableSet truth = label_trace_pair(p, f.catalog).tables;
      const RetrievalOutput all = run_pipeline(p.question, inputs, everything, {});
      recall_misses += precision_recall(all.tables, truth).recall != 1.0;
    }
  }
  Outcome o;
  o.pass = chain_breaks == 0 && recall_misses == 0 && questions >= 200;
  o.detail = std::to_string(questions) + " questions, " + std::to_string(runs) + " schedule runs (" +
             std::to_string(collapsed) + " collapsed by intersection); chain breaks=" + std::to_string(chain_breaks) +
             ", retrieve-everything recall misses=" + std::to_string(recall_misses);
  return o;
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  const SyntheticWorkload w = generate_synthetic(enterprise_profile());
  std::vector<double> sizes;
  for (const TracePair& p : w.trace) sizes.push_back(static_cast<double>(extract_relevant_set(p.sql, w.catalog).tables.size()));
  const double secs = seconds_since(t0);
  const double n = static_cast<double>(sizes.size());
  double ge7 = 0, mean = 0;
  for (double s : sizes) {
    ge7 += s >= 7;
    mean += s;
  }
  ge7 /= n;
  mean /= n;
  double var = 0;
  for (double s : sizes) var += (s - mean) * (s - mean);
  const double stddev = std::sqrt(var / n);
  const double median_fk = catalog_stats(w.catalog).median_fk_per_table;
  Outcome o;
  o.pass = sizes.size() == 500 && std::abs(ge7 - 0.25) <= 0.05 && std::abs(stddev - 3.3) <= 0.4 && median_fk >= 7 &&
           secs < 30.0;
  o.detail = "P(>=7)=" + fmt("%.3f", ge7) + " stddev=" + fmt("%.3f", stddev) + " median FK/table=" +
             fmt("%.1f", median_fk) + " queries=" + std::to_string(sizes.size()) + "; " + fmt("%.2fs", secs);
  return o;
}

Outcome criterion6() {
  const SyntheticWorkload w = generate_synthetic(group_profile(2));
  const TraceSplit split = split_trace(w.trace, 0.2, 7);
  const ChunkIndex chunks = build_chunk_index(split.index, w.catalog, {});
  const KnowledgeGraph graph = build_knowledge_graph(w.catalog, {});
  const auto schedules = sweep_schedules(w.catalog.table_count(), chunks.size(), graph.size());
  const auto rows = evaluate_schedules({w.catalog, chunks, graph}, split.held_out, schedules, {}, "group2");

  Outcome o;
  o.pass = false;
  std::size_t trend = 0;
  std::ostringstream detail;
  for (std::size_t s = 0; s < schedules.size(); ++s) {
    const SweepRow* first = nullptr;
    const SweepRow* last = nullptr;
    for (const SweepRow& r : rows) {
      if (r.schedule_id != s) continue;
      if (!first) first = &r;
      last = &r;
    }
    const bool ok = last->metrics.recall >= 0.75 && last->metrics.precision >= 0.35 &&
                    last->metrics.precision > first->metrics.precision;
    trend += last->metrics.precision >= first->metrics.precision;
    o.pass = o.pass || ok;
    detail << "s" << s << "(k1=" << first->step.k << ",l1=" << first->step.l << "): P " << fmt("%.3f", first->metrics.precision)
           << "->" << fmt("%.3f", last->metrics.precision) << " R " << fmt("%.3f", last->metrics.recall)
           << (ok ? " ok" : "") << "; ";
  }
  detail << "later>=first on " << trend << "/" << schedules.size() << "; held-out=" << split.held_out.size();
  o.detail = detail.str();
  return o;
}

Outcome criterion7() {
  const SyntheticWorkload w = generate_synthetic(group_profile(4));
  const TraceSplit split = split_trace(w.trace, 0.2, 7);
  const ChunkIndex chunks = build_chunk_index(split.index, w.catalog, {});
  const KnowledgeGraph graph = build_knowledge_graph(w.catalog, {});
  std::vector<std::string> questions;
  for (const TracePair& p : split.held_out) questions.push_back(p.question);
  const LatencyReport r =
      latency_bench({w.catalog, chunks, graph}, questions, default_schedule(w.catalog.table_count()), {}, 400);
  Outcome o;
  o.pass = r.sample_count >= 200 && r.p50_ms <= 50.0 && r.p99_ms <= 150.0;
  o.detail = std::to_string(r.sample_count) + " queries on " + std::to_string(w.catalog.table_count()) + " tables/" +
             std::to_string(w.catalog.column_count()) + " columns: p50=" + fmt("%.2fms", r.p50_ms) +
             " p90=" + fmt("%.2fms", r.p90_ms) + " p99=" + fmt("%.2fms", r.p99_ms) + " mean=" + fmt("%.2fms", r.mean_ms);
  for (const auto& [stage, ms] : r.per_stage_means_ms) o.detail += " " + stage + "=" + fmt("%.3fms", ms);
  return o;
}

Outcome criterion8() {
  auto ts = [](std::initializer_list<int> ids) {
    TableSet s;
    for (int i : ids) s.insert(table_id(static_cast<std::size_t>(i)));
    return s;
  };
  struct Case {
    TableSet p, t;
    double precision, recall;
  };
  const Case cases[] = {
      {ts({1, 2}), ts({1, 2}), 1.0, 1.0},
      {ts({1, 2, 3, 4}), ts({1, 2}), 0.5, 1.0},
      {ts({}), ts({1}), 0.0, 0.0},
      {ts({1}), ts({}), 0.0, 0.0},
      {ts({}), ts({}), 1.0, 1.0},
      {ts({1, 2, 3}), ts({2, 3, 4, 5}), 2.0 / 3.0, 0.5},
      {ts({7}), ts({8}), 0.0, 0.0},
  };
  int bad = 0;
  for (const Case& c : cases) {
    const Metrics m = precision_recall(c.p, c.t);
    bad += m.precision != c.precision || m.recall != c.recall;
  }
  std::mt19937_64 rng(8008);
  std::uniform_real_distribution<double> d(0.0, 250.0);
  int bad_pct = 0, checks = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(1 + rng() % 500);
    for (auto& x : v) x = rng() % 4 == 0 ? std::floor(d(rng)) : d(rng);
    for (double p : {0.5, 1.0, 10.0, 50.0, 90.0, 95.0, 99.0, 99.9, 100.0}) {
      ++checks;
      bad_pct += percentile_nearest_rank(v, p) != oracle::percentile_by_sort(v, p);
    }
  }
  Outcome o;
  o.pass = bad == 0 && bad_pct == 0;
  o.detail = std::to_string(std::size(cases)) + " hand cases (mismatches " + std::to_string(bad) + "), " +
             std::to_string(checks) + " percentile checks (mismatches " + std::to_string(bad_pct) + ")";
  return o;
}

Outcome criterion9() {
  const SyntheticWorkload w = generate_synthetic(group_profile(2));
  const ChunkIndex chunks = build_chunk_index(w.trace, w.catalog, {});
  const KnowledgeGraph graph = build_knowledge_graph(w.catalog, {});
  const PipelineInputs inputs{w.catalog, chunks, graph};
  const IterationSchedule sched = default_schedule(w.catalog.table_count());
  PipelineConfig sequential;
  sequential.parallel_stages = false;
  PipelineConfig concurrent;
  concurrent.parallel_stages = true;

  test::RandomSchema words(9009);
  std::mt19937_64 rng(9010);
  int diffs = 0, collapsed = 0;
  for (int i = 0; i < 100; ++i) {
    const std::string q = i % 2 ? w.trace[rng() % w.trace.size()].question : words.phrase(1 + rng() % 6);
    auto run = [&](const PipelineConfig& cfg) {
      try {
        return to_json(run_pipeline(q, inputs, sched, cfg), w.catalog).dump();
      } catch (const ScopeCollapsedError& e) {
        ++collapsed;
        return std::string("collapsed@") + std::to_string(e.step());
      }
    };
    const std::string a = run(sequential);
    diffs += a != run(sequential);
    diffs += a != run(concurrent);
    diffs += a != run(concurrent);
  }
  Outcome o;
  o.pass = diffs == 0;
  o.detail = "100 questions x 4 runs (2 sequential, 2 concurrent); differing outputs=" + std::to_string(diffs);
  if (collapsed) o.detail += ", collapsed=" + std::to_string(collapsed);
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"oracle equivalence", criterion1},     {"hypergraph ranking fidelity", criterion2},
      {"structural counts", criterion3},      {"pipeline monotonicity", criterion4},
      {"generator calibration", criterion5},  {"quality envelope", criterion6},
      {"latency", criterion7},                {"metric exactness", criterion8},
      {"determinism and parallel equivalence", criterion9},
  };
  int failures = 0;
  int n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d %-38s %s  %s\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
