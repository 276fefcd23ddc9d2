#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "csr/artifacts.hpp"
#include "csr/pipeline.hpp"

namespace csr {

class RequestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QueryRequest {
  std::string question;
  std::optional<IterationSchedule> schedule_override;
  std::optional<std::size_t> max_entities;
  bool include_timings = false;
};

/// Throws RequestError for a missing or blank question or malformed fields.
QueryRequest parse_query_request(const nlohmann::json& body);

/// QueryResponse payload: entities ("table.column" with score), tables, schema_version and,
/// when requested, stage_timings_ms. Throws ScopeCollapsedError.
nlohmann::json answer_query(const IndexBundle& bundle, const QueryRequest& request);

struct ServerOptions {
  std::size_t max_concurrent_requests = 8;
};

/// HTTP front end: POST /v1/retrieve, GET /v1/health, GET /v1/stats.
class RetrievalServer {
 public:
  RetrievalServer(const IndexBundle& bundle, ServerOptions options = {});
  ~RetrievalServer();
  RetrievalServer(const RetrievalServer&) = delete;
  RetrievalServer& operator=(const RetrievalServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void listen();
  /// Stops accepting connections; in-flight requests finish first.
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace csr
