#include "csr/service.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>

#include "httplib.h"

namespace csr {

QueryRequest parse_query_request(const nlohmann::json& body) {
  if (!body.is_object()) throw RequestError("request body must be a JSON object");
  QueryRequest r;
  auto q = body.find("question");
  if (q == body.end() || !q->is_string()) throw RequestError("missing string field 'question'");
  r.question = q->get<std::string>();
  const bool blank = std::all_of(r.question.begin(), r.question.end(),
                                 [](unsigned char c) { return std::isspace(c); });
  if (blank) throw RequestError("question is empty");
  try {
    if (auto it = body.find("schedule_override"); it != body.end() && !it->is_null()) {
      r.schedule_override = schedule_from_json(*it);
    }
    if (auto it = body.find("max_entities"); it != body.end() && !it->is_null()) {
      if (!it->is_number_integer() || it->get<std::int64_t>() <= 0) {
        throw RequestError("max_entities must be a positive integer");
      }
      r.max_entities = it->get<std::size_t>();
    }
    if (auto it = body.find("include_timings"); it != body.end() && !it->is_null()) {
      r.include_timings = it->get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw RequestError(std::string("malformed request: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw RequestError(e.what());
  }
  return r;
}

nlohmann::json answer_query(const IndexBundle& bundle, const QueryRequest& request) {
  IterationSchedule schedule = request.schedule_override ? *request.schedule_override : bundle.schedule();
  if (request.max_entities) {
    schedule.steps.back().h = std::min(schedule.steps.back().h, *request.max_entities);
  }
  const RetrievalOutput out = run_pipeline(request.question, bundle.inputs(), schedule, bundle.config);

  nlohmann::json entities = nlohmann::json::array();
  for (const SemanticEntity& e : out.entities) {
    entities.push_back({{"entity", bundle.catalog.table(e.table).name + "." + bundle.catalog.column(e.column).name},
                        {"score", e.score}});
  }
  nlohmann::json tables = nlohmann::json::array();
  for (TableId t : out.tables) tables.push_back(bundle.catalog.table(t).name);
  nlohmann::json response = {{"entities", std::move(entities)},
                             {"tables", std::move(tables)},
                             {"schema_version", bundle.manifest.schema_version}};
  if (request.include_timings) response["stage_timings_ms"] = out.timings.as_millis();
  return response;
}

struct RetrievalServer::Impl {
  explicit Impl(const IndexBundle& b) : bundle(b) {}
  const IndexBundle& bundle;
  httplib::Server server;
};

namespace {

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

RetrievalServer::RetrievalServer(const IndexBundle& bundle, ServerOptions options)
    : impl_(std::make_unique<Impl>(bundle)) {
  const std::size_t cap = std::max<std::size_t>(1, options.max_concurrent_requests);
  impl_->server.new_task_queue = [cap] { return new httplib::ThreadPool(cap); };

  const IndexBundle& b = impl_->bundle;
  impl_->server.Get("/v1/health", [&b](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"status", "ok"}, {"schema_version", b.manifest.schema_version}});
  });

  impl_->server.Get("/v1/stats", [&b](const httplib::Request&, httplib::Response& res) {
    const CatalogStats s = catalog_stats(b.catalog);
    reply(res, 200,
          {{"schema_version", b.manifest.schema_version},
           {"table_count", s.table_count},
           {"column_count", s.column_count},
           {"median_fk_per_table", s.median_fk_per_table},
           {"stddev_columns_per_table", s.stddev_columns_per_table},
           {"chunk_count", b.chunks.size()},
           {"triplet_count", b.graph.size()},
           {"dimension", b.chunks.config().dimension}});
  });

  impl_->server.Post("/v1/retrieve", [&b](const httplib::Request& req, httplib::Response& res) {
    QueryRequest request;
    try {
      request = parse_query_request(nlohmann::json::parse(req.body));
    } catch (const nlohmann::json::parse_error& e) {
      return reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
    } catch (const RequestError& e) {
      return reply(res, 400, {{"error", e.what()}});
    }
    try {
      reply(res, 200, answer_query(b, request));
    } catch (const ScopeCollapsedError& e) {
      reply(res, 422, {{"error", e.what()}, {"iteration", e.step()}});
    } catch (const std::invalid_argument& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  });
}

RetrievalServer::~RetrievalServer() { stop(); }

int RetrievalServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void RetrievalServer::listen() { impl_->server.listen_after_bind(); }

void RetrievalServer::stop() {
  if (impl_) impl_->server.stop();
}

void RetrievalServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace csr
