#include <chrono>
#include <random>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "csr/eval.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace csr;

namespace {

TableSet ts(std::initializer_list<int> ids) {
  TableSet s;
  for (int i : ids) s.insert(table_id(static_cast<std::size_t>(i)));
  return s;
}

}  // namespace

TEST_CASE("precision and recall hand cases") {
  Metrics m = precision_recall(ts({1, 2}), ts({1, 2}));
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  m = precision_recall(ts({1, 2, 3, 4}), ts({1, 2}));
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 1.0);
  CHECK(m.true_pos == 2);
  CHECK(m.false_pos == 2);
  m = precision_recall(ts({}), ts({1}));
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  m = precision_recall(ts({1}), ts({}));
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  m = precision_recall(ts({}), ts({}));
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
}

TEST_CASE("precision and recall swap under argument swap") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    TableSet a, b;
    for (int t = 0; t < 12; ++t) {
      if (rng() % 3 == 0) a.insert(table_id(t));
      if (rng() % 3 == 0) b.insert(table_id(t));
    }
    if (a.empty() && b.empty()) continue;
    const Metrics x = precision_recall(a, b);
    const Metrics y = precision_recall(b, a);
    CHECK(x.precision == y.recall);
    CHECK(x.recall == y.precision);
  }
}

TEST_CASE("nearest-rank percentile equals the full-sort oracle") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + rng() % 300);
    for (auto& x : v) x = d(rng);
    for (double p : {0.1, 1.0, 25.0, 50.0, 90.0, 99.0, 99.9, 100.0}) {
      CHECK(percentile_nearest_rank(v, p) == oracle::percentile_by_sort(v, p));
    }
  }
  CHECK(percentile_nearest_rank({5, 1, 3, 2, 4}, 50) == 3);
  CHECK(percentile_nearest_rank({5, 1, 3, 2, 4}, 100) == 5);
  CHECK_THROWS_AS(percentile_nearest_rank({}, 50), std::invalid_argument);
  CHECK_THROWS_AS(percentile_nearest_rank({1.0}, 0), std::invalid_argument);
}

TEST_CASE("generator is deterministic per seed") {
  GeneratorProfile p = group_profile(1, 99);
  p.query_count = 100;
  const SyntheticWorkload a = generate_synthetic(p);
  const SyntheticWorkload b = generate_synthetic(p);
  CHECK(a.catalog == b.catalog);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].question == b.trace[i].question);
    CHECK(a.trace[i].sql == b.trace[i].sql);
  }
  p.seed = 100;
  const SyntheticWorkload c = generate_synthetic(p);
  CHECK_FALSE(c.catalog == a.catalog);
}

TEST_CASE("generator plants the relevant sets its SQL references") {
  GeneratorProfile p = group_profile(2);
  p.query_count = 200;
  const SyntheticWorkload w = generate_synthetic(p);
  REQUIRE(w.planted.size() == w.trace.size());
  for (std::size_t i = 0; i < w.trace.size(); ++i) {
    CHECK(extract_relevant_set(w.trace[i].sql, w.catalog).tables == w.planted[i]);
  }
}

TEST_CASE("enterprise-sized profile keeps Group 4 column density") {
  GeneratorProfile p = enterprise_profile();
  p.column_count = 0;
  const SyntheticWorkload w = generate_synthetic(p);
  CHECK(w.catalog.table_count() == 246);
  CHECK(std::abs(static_cast<double>(w.catalog.column_count()) - 3021.0) <= 0.15 * 3021.0);
}

TEST_CASE("generated P(relevant >= 7) is near the target") {
  const SyntheticWorkload w = generate_synthetic(enterprise_profile());
  REQUIRE(w.trace.size() == 500);
  std::size_t big = 0;
  for (const auto& t : w.planted) big += t.size() >= 7;
  CHECK(std::abs(static_cast<double>(big) / 500.0 - 0.25) <= 0.05);
}

TEST_CASE("infeasible profiles are rejected") {
  GeneratorProfile p = enterprise_profile();
  p.column_count = 0;
  p.columns_per_table_mean = 3.0;
  p.fk_median_target = 7.5;
  CHECK_THROWS_AS(generate_synthetic(p), std::invalid_argument);
  p = enterprise_profile();
  p.table_count = 0;
  CHECK_THROWS_AS(generate_synthetic(p), std::invalid_argument);
  p = enterprise_profile();
  p.max_tables_per_query = 3;
  CHECK_THROWS_AS(generate_synthetic(p), std::invalid_argument);
}

TEST_CASE("size pmf is a distribution") {
  const auto pmf = relevant_size_pmf(enterprise_profile());
  double total = 0, tail = 0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    CHECK(pmf[i] >= 0.0);
    total += pmf[i];
    if (i + 1 >= 7) tail += pmf[i];
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(tail == doctest::Approx(0.25));
}

TEST_CASE("profile json round trip") {
  const GeneratorProfile p = group_profile(3, 5);
  CHECK(to_json(generator_profile_from_json(to_json(p))) == to_json(p));
}

TEST_CASE("split keeps held-out questions out of the index") {
  const auto trace = test::shop_trace();
  const TraceSplit s = split_trace(trace, 0.3, 1);
  CHECK(s.held_out.size() == 3);
  CHECK(s.index.size() == 7);
  for (const auto& h : s.held_out) {
    for (const auto& i : s.index) CHECK(h.question != i.question);
  }
}

TEST_CASE("evaluation refuses a question whose chunk is indexed") {
  const SchemaCatalog c = test::shop_catalog();
  const auto trace = test::shop_trace();
  const ChunkIndex chunks = build_chunk_index(trace, c, {});
  const KnowledgeGraph graph = build_knowledge_graph(c, {});
  const std::vector<IterationSchedule> schedules = {default_schedule(6)};
  CHECK_THROWS_AS(evaluate_schedules({c, chunks, graph}, std::span(trace).first(1), schedules, {}, "g"),
                  std::invalid_argument);
}

TEST_CASE("one schedule, one question gives one row per iteration") {
  const SchemaCatalog c = test::shop_catalog();
  auto trace = test::shop_trace();
  const TracePair held = trace.back();
  trace.pop_back();
  const ChunkIndex chunks = build_chunk_index(trace, c, {});
  const KnowledgeGraph graph = build_knowledge_graph(c, {});
  const std::vector<IterationSchedule> schedules = {IterationSchedule{{{4, 8, 10}, {2, 4, 10}, {1, 2, 10}}, {}}};
  const auto rows = evaluate_schedules({c, chunks, graph}, std::span(&held, 1), schedules, {}, "g");
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(rows[i].iteration == i + 1);

  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  const std::string text = csv.str();
  CHECK(text.rfind("group,schedule_id,iteration,k,l,h,precision,recall\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("retrieve-everything schedule reaches recall 1") {
  const SchemaCatalog c = test::shop_catalog();
  const auto trace = test::shop_trace();
  const std::vector<IterationSchedule> schedules = {
      IterationSchedule{{{1000, 1000, 1000}, {1000, 1000, 1000}}, {}}};
  const auto rows = run_sweep(c, trace, schedules, {}, {"shop", 0.3, 3});
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(r.metrics.recall == 1.0);
}

TEST_CASE("latency of a constant-time stub has p50 close to p99") {
  const std::vector<std::string> qs = {"a", "b"};
  const LatencyReport r = measure_latency(
      [](const std::string&) {
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        return StageTimings{};
      },
      qs, 40, 2);
  CHECK(r.sample_count == 40);
  CHECK(r.p50_ms >= 2.0);
  CHECK(r.p99_ms - r.p50_ms < 5.0);
  CHECK(r.p50_ms <= r.p90_ms);
  CHECK(r.p90_ms <= r.p99_ms);
}

TEST_CASE("latency bench needs at least 30 repetitions") {
  const SchemaCatalog c = test::shop_catalog();
  const ChunkIndex chunks = build_chunk_index(test::shop_trace(), c, {});
  const KnowledgeGraph graph = build_knowledge_graph(c, {});
  const std::vector<std::string> qs = {"orders"};
  CHECK_THROWS_AS(latency_bench({c, chunks, graph}, qs, default_schedule(6), {}, 29), std::invalid_argument);
  const LatencyReport r = latency_bench({c, chunks, graph}, qs, default_schedule(6), {}, 30);
  CHECK(r.per_stage_means_ms.count("relational") == 1);
  CHECK(to_json(r).contains("p99_ms"));
}
