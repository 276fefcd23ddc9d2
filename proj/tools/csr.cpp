// csr: build, query, evaluate and serve schema retrieval indexes.

#include <pthread.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "csr/artifacts.hpp"
#include "csr/eval.hpp"
#include "csr/service.hpp"

namespace fs = std::filesystem;
using namespace csr;

namespace {

enum Exit { kOk = 0, kFailure = 1, kInvalidInput = 2, kScopeCollapsed = 3 };

struct CliError {
  int code;
  nlohmann::json body;
};

[[noreturn]] void fail(int code, const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
  extra["error"] = message;
  throw CliError{code, std::move(extra)};
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) {
    fail(kInvalidInput, what + " not found: " + path.string(), {{"path", path.string()}});
  }
}

PipelineConfig read_config(const std::string& path) {
  if (path.empty()) return {};
  require_file(path, "config file");
  return load_pipeline_config(path);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(kFailure, "cannot write " + path.string(), {{"path", path.string()}});
  return out;
}

GeneratorProfile named_profile(const std::string& name, std::uint64_t seed) {
  if (name == "enterprise") return enterprise_profile(seed);
  if (name.size() == 6 && name.rfind("group", 0) == 0 && name[5] >= '1' && name[5] <= '4') {
    return group_profile(name[5] - '0', seed);
  }
  if (fs::is_regular_file(name)) {
    std::ifstream in(name);
    GeneratorProfile p = generator_profile_from_json(nlohmann::json::parse(in));
    p.seed = seed;
    return p;
  }
  fail(kInvalidInput, "unknown profile: " + name + " (expected enterprise, group1..group4 or a JSON file)");
}

struct GenerateArgs {
  std::string profile = "enterprise";
  std::string out;
};

int cmd_generate(const GenerateArgs& a, std::uint64_t seed) {
  const GeneratorProfile profile = named_profile(a.profile, seed);
  const SyntheticWorkload w = generate_synthetic(profile);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  open_out(dir / "schema.json") << catalog_to_json(w.catalog).dump(2) << "\n";
  write_trace_file(dir / "trace.jsonl", w.trace);
  open_out(dir / "profile.json") << to_json(profile).dump(2) << "\n";
  const CatalogStats s = catalog_stats(w.catalog);
  std::cout << nlohmann::json{{"tables", s.table_count},
                              {"columns", s.column_count},
                              {"median_fk_per_table", s.median_fk_per_table},
                              {"queries", w.trace.size()},
                              {"out", dir.string()}}
                   .dump()
            << "\n";
  return kOk;
}

struct IndexArgs {
  std::string schema, trace, out, config;
};

int cmd_index(const IndexArgs& a) {
  require_file(a.schema, "schema file");
  require_file(a.trace, "trace file");
  const PipelineConfig config = read_config(a.config);
  const SchemaCatalog catalog = load_catalog_file(a.schema);
  const std::vector<TracePair> trace = load_trace_file(a.trace);
  const ChunkIndex chunks = build_chunk_index(trace, catalog, config.similarity);
  const KnowledgeGraph graph = build_knowledge_graph(catalog, config.similarity);
  const Manifest m = write_index(a.out, catalog, chunks, graph, config);
  nlohmann::json artifacts = nlohmann::json::array();
  for (const auto& info : m.artifacts) artifacts.push_back({{"name", info.name}, {"content_hash", info.content_hash}});
  std::cout << nlohmann::json{{"schema_version", m.schema_version}, {"artifacts", artifacts}, {"out", a.out}}.dump()
            << "\n";
  return kOk;
}

IndexBundle open_index(const std::string& dir) {
  require_file(fs::path(dir) / "manifest.json", "index manifest");
  return load_index(dir);
}

struct QueryArgs {
  std::string index, question, schedule;
  std::size_t max_entities = 0;
  bool tables_only = false;
  bool timings = false;
};

int cmd_query(const QueryArgs& a) {
  const IndexBundle bundle = open_index(a.index);
  nlohmann::json body = {{"question", a.question}, {"include_timings", a.timings}};
  if (a.max_entities) body["max_entities"] = a.max_entities;
  if (!a.schedule.empty()) body["schedule_override"] = nlohmann::json::parse(a.schedule);
  QueryRequest request;
  try {
    request = parse_query_request(body);
  } catch (const RequestError& e) {
    fail(kInvalidInput, e.what());
  }
  const nlohmann::json response = answer_query(bundle, request);
  if (a.tables_only) {
    for (const auto& t : response.at("tables")) std::cout << t.get<std::string>() << "\n";
  } else {
    std::cout << response.dump() << "\n";
  }
  return kOk;
}

struct EvalArgs {
  std::string schema, trace, config, out, group = "custom";
  double held_out = 0.2;
};

int cmd_eval(const EvalArgs& a, std::uint64_t seed) {
  require_file(a.schema, "schema file");
  require_file(a.trace, "trace file");
  const PipelineConfig config = read_config(a.config);
  const SchemaCatalog catalog = load_catalog_file(a.schema);
  const std::vector<TracePair> trace = load_trace_file(a.trace);
  const TraceSplit split = split_trace(trace, a.held_out, seed);
  const ChunkIndex chunks = build_chunk_index(split.index, catalog, config.similarity);
  const KnowledgeGraph graph = build_knowledge_graph(catalog, config.similarity);
  std::vector<IterationSchedule> schedules;
  if (!config.schedule.steps.empty()) schedules.push_back(config.schedule);
  else schedules = sweep_schedules(catalog.table_count(), chunks.size(), graph.size());
  const auto rows = evaluate_schedules({catalog, chunks, graph}, split.held_out, schedules, config, a.group);
  if (a.out.empty()) {
    write_sweep_csv(std::cout, rows);
  } else {
    auto out = open_out(a.out);
    write_sweep_csv(out, rows);
  }
  return kOk;
}

struct BenchArgs {
  std::string index, trace, out;
  std::size_t reps = 200;
};

int cmd_bench(const BenchArgs& a) {
  const IndexBundle bundle = open_index(a.index);
  std::vector<std::string> questions;
  if (!a.trace.empty()) {
    require_file(a.trace, "trace file");
    for (const TracePair& p : load_trace_file(a.trace)) questions.push_back(p.question);
  } else {
    for (const Chunk& c : bundle.chunks.chunks()) questions.push_back(c.question);
  }
  const LatencyReport r = latency_bench(bundle.inputs(), questions, bundle.schedule(), bundle.config, a.reps);
  const std::string text = to_json(r).dump(2);
  if (a.out.empty()) std::cout << text << "\n";
  else open_out(a.out) << text << "\n";
  return kOk;
}

struct ServeArgs {
  std::string index, bind = "127.0.0.1:8080";
  std::size_t max_concurrent = 8;
};

int cmd_serve(const ServeArgs& a) {
  const IndexBundle bundle = open_index(a.index);
  const auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) fail(kInvalidInput, "bind address must be host:port: " + a.bind);
  const std::string host = a.bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(a.bind.substr(colon + 1));
  } catch (const std::exception&) {
    fail(kInvalidInput, "bad port in bind address: " + a.bind);
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  RetrievalServer server(bundle, {a.max_concurrent});
  const int bound = server.bind(host, port);
  if (bound < 0) fail(kFailure, "cannot bind " + a.bind);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  std::cerr << nlohmann::json{{"listening", host + ":" + std::to_string(bound)},
                              {"schema_version", bundle.manifest.schema_version}}
                   .dump()
            << std::endl;
  server.listen();
  // listen() also returns if the server fails on its own; wake the waiter so it can exit.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schema retrieval for text-to-SQL: index, query, eval, bench, serve"};
  app.require_subcommand(1);
  std::uint64_t seed = 20250101;
  app.add_option("--seed", seed, "Seed for generation and held-out splits");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic schema and trace");
  generate->add_option("--profile", gen.profile, "enterprise, group1..group4, or a profile JSON file");
  generate->add_option("--out", gen.out, "Output directory")->required();

  IndexArgs idx;
  auto* index = app.add_subcommand("index", "Build and persist retrieval indexes");
  index->add_option("--schema", idx.schema, "Schema JSON")->required();
  index->add_option("--trace", idx.trace, "Trace JSONL of {question, sql}")->required();
  index->add_option("--out", idx.out, "Index directory")->required();
  index->add_option("--config", idx.config, "Pipeline config JSON");

  QueryArgs qa;
  auto* query = app.add_subcommand("query", "Retrieve schema entities for a question");
  query->add_option("--index", qa.index, "Index directory")->required();
  query->add_option("question", qa.question, "Natural-language question")->required();
  query->add_option("--schedule", qa.schedule, "Schedule override as JSON");
  query->add_option("--max-entities", qa.max_entities, "Cap on returned entities");
  query->add_flag("--tables-only", qa.tables_only, "Print table names, one per line");
  query->add_flag("--timings", qa.timings, "Include per-stage timings");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Sweep schedules on a held-out split and write CSV");
  eval->add_option("--schema", ea.schema, "Schema JSON")->required();
  eval->add_option("--trace", ea.trace, "Trace JSONL")->required();
  eval->add_option("--config", ea.config, "Pipeline config JSON; its schedule replaces the sweep");
  eval->add_option("--out", ea.out, "CSV path (default stdout)");
  eval->add_option("--group", ea.group, "Group label for the CSV");
  eval->add_option("--held-out", ea.held_out, "Held-out fraction")->check(CLI::Range(0.01, 0.99));

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Measure end-to-end latency percentiles");
  bench->add_option("--index", ba.index, "Index directory")->required();
  bench->add_option("--trace", ba.trace, "Questions to replay (default: indexed questions)");
  bench->add_option("--reps", ba.reps, "Timed queries")->check(CLI::Range(30, 1000000));
  bench->add_option("--out", ba.out, "Report path (default stdout)");

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "Serve /v1/retrieve over HTTP");
  serve->add_option("--index", sa.index, "Index directory")->required();
  serve->add_option("--bind", sa.bind, "host:port; port 0 picks a free port");
  serve->add_option("--max-concurrent", sa.max_concurrent, "Concurrent request cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return kInvalidInput;
  }

  try {
    if (*generate) return cmd_generate(gen, seed);
    if (*index) return cmd_index(idx);
    if (*query) return cmd_query(qa);
    if (*eval) return cmd_eval(ea, seed);
    if (*bench) return cmd_bench(ba);
    if (*serve) return cmd_serve(sa);
  } catch (const CliError& e) {
    std::cerr << e.body.dump() << "\n";
    return e.code;
  } catch (const ScopeCollapsedError& e) {
    std::cerr << nlohmann::json{{"error", e.what()}, {"iteration", e.step()}}.dump() << "\n";
    return kScopeCollapsed;
  } catch (const CatalogError& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return kInvalidInput;
  } catch (const ArtifactError& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return kInvalidInput;
  } catch (const SqlError& e) {
    std::cerr << nlohmann::json{{"error", e.what()}, {"offset", e.offset()}}.dump() << "\n";
    return kInvalidInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << nlohmann::json{{"error", std::string("malformed JSON: ") + e.what()}}.dump() << "\n";
    return kInvalidInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return kFailure;
  }
  return kFailure;
}
