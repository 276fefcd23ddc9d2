#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "csr/service.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Run csr_run(const std::vector<std::string>& args) {
  static const fs::path dir = fs::temp_directory_path() / "csr_cli_io";
  fs::create_directories(dir);
  std::string cmd = quote(CSR_BINARY);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " > " + quote((dir / "out").string()) + " 2> " + quote((dir / "err").string());
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "out"), slurp(dir / "err")};
}

struct Workspace {
  fs::path root = fs::temp_directory_path() / "csr_cli_ws";
  fs::path data = root / "g1";
  fs::path index = root / "idx";

  Workspace() {
    fs::remove_all(root);
    REQUIRE(csr_run({"generate", "--profile", "group1", "--out", data.string()}).code == 0);
    const Run r = csr_run({"index", "--schema", (data / "schema.json").string(), "--trace",
                           (data / "trace.jsonl").string(), "--out", index.string()});
    REQUIRE(r.code == 0);
  }
};

const Workspace& workspace() {
  static const Workspace w;
  return w;
}

}  // namespace

TEST_CASE("index writes a manifest with three artifacts") {
  const Workspace& w = workspace();
  const auto manifest = nlohmann::json::parse(slurp(w.index / "manifest.json"));
  CHECK(manifest.at("artifacts").size() == 3);
  CHECK(manifest.at("format_version") == 1);
}

TEST_CASE("missing schema exits 2 and names the path") {
  const Run r = csr_run({"index", "--schema", "/nonexistent/schema.json", "--trace", "/nonexistent/t.jsonl", "--out",
                         (fs::temp_directory_path() / "csr_cli_never").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find('\n') == r.err.size() - 1);
  const auto err = nlohmann::json::parse(r.err);
  CHECK(err.at("error").get<std::string>().find("/nonexistent/schema.json") != std::string::npos);
}

TEST_CASE("reindexing unchanged inputs keeps content hashes") {
  const Workspace& w = workspace();
  const fs::path again = w.root / "idx2";
  REQUIRE(csr_run({"index", "--schema", (w.data / "schema.json").string(), "--trace", (w.data / "trace.jsonl").string(),
                   "--out", again.string()})
              .code == 0);
  const auto a = nlohmann::json::parse(slurp(w.index / "manifest.json"));
  const auto b = nlohmann::json::parse(slurp(again / "manifest.json"));
  CHECK(a.at("artifacts") == b.at("artifacts"));
}

TEST_CASE("query prints a response; repeated runs are byte-identical") {
  const Workspace& w = workspace();
  const auto trace_line = slurp(w.data / "trace.jsonl").substr(0, slurp(w.data / "trace.jsonl").find('\n'));
  const std::string q = nlohmann::json::parse(trace_line).at("question");
  const Run a = csr_run({"query", "--index", w.index.string(), q});
  const Run b = csr_run({"query", "--index", w.index.string(), q});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const auto j = nlohmann::json::parse(a.out);
  CHECK(j.at("entities").size() >= 1);

  const csr::IndexBundle bundle = csr::load_index(w.index);
  csr::QueryRequest req;
  req.question = q;
  CHECK(a.out == csr::answer_query(bundle, req).dump() + "\n");

  const Run t = csr_run({"query", "--index", w.index.string(), "--tables-only", q});
  REQUIRE(t.code == 0);
  CHECK(t.out.front() != '{');
  std::string expected;
  for (const auto& name : j.at("tables")) expected += name.get<std::string>() + "\n";
  CHECK(t.out == expected);

  const Run timed = csr_run({"query", "--index", w.index.string(), "--timings", q});
  CHECK(nlohmann::json::parse(timed.out).contains("stage_timings_ms"));
}

TEST_CASE("scope collapse exits 3 with the iteration") {
  const Workspace& w = workspace();
  const std::string schedule = R"({"steps": [[1, 1, 5]], "scope_combine": "intersection"})";
  const csr::IndexBundle bundle = csr::load_index(w.index);
  std::string collapsing;
  for (const auto& p : csr::load_trace_file(w.data / "trace.jsonl")) {
    try {
      csr::answer_query(bundle, csr::parse_query_request(
                                    {{"question", p.question}, {"schedule_override", nlohmann::json::parse(schedule)}}));
    } catch (const csr::ScopeCollapsedError&) {
      collapsing = p.question;
      break;
    }
  }
  REQUIRE_FALSE(collapsing.empty());
  const Run r = csr_run({"query", "--index", w.index.string(), "--schedule", schedule, collapsing});
  CHECK(r.code == 3);
  CHECK(nlohmann::json::parse(r.err).at("iteration") == 1);
}

TEST_CASE("eval writes the sweep csv") {
  const Workspace& w = workspace();
  const fs::path csv = w.root / "sweep.csv";
  const Run r = csr_run({"eval", "--schema", (w.data / "schema.json").string(), "--trace",
                         (w.data / "trace.jsonl").string(), "--group", "g1", "--out", csv.string()});
  REQUIRE(r.code == 0);
  const std::string text = slurp(csv);
  CHECK(text.rfind("group,schedule_id,iteration,k,l,h,precision,recall\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 10);
}

TEST_CASE("bench reports percentiles") {
  const Workspace& w = workspace();
  const Run r = csr_run({"bench", "--index", w.index.string(), "--reps", "40"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("sample_count") == 40);
  CHECK(j.at("p50_ms").get<double>() <= j.at("p99_ms").get<double>());
}

TEST_CASE("bad usage exits 2") {
  CHECK(csr_run({"query"}).code == 2);
  CHECK(csr_run({"nonsense"}).code == 2);
  CHECK(csr_run({"query", "--index", "/nonexistent", "q"}).code == 2);
}
