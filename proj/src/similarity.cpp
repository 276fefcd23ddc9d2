#include "csr/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <unordered_set>

#include "httplib.h"

namespace csr {

void SimilarityConfig::validate() const {
  if (dimension < 64) throw std::invalid_argument("similarity dimension must be >= 64");
  if (!(bm25_k1 > 0.0)) throw std::invalid_argument("bm25_k1 must be > 0");
  if (!(bm25_b >= 0.0 && bm25_b <= 1.0)) throw std::invalid_argument("bm25_b must be in [0, 1]");
  if (timeout.count() <= 0) throw std::invalid_argument("embedder timeout must be positive");
}

nlohmann::json to_json(const SimilarityConfig& c) {
  return {{"metric", c.metric == Metric::cosine ? "cosine" : "bm25"},
          {"embedder", c.embedder == EmbedderKind::hashed_tfidf ? "hashed_tfidf" : "external"},
          {"dimension", c.dimension},
          {"bm25_k1", c.bm25_k1},
          {"bm25_b", c.bm25_b},
          {"endpoint", c.endpoint},
          {"timeout_ms", c.timeout.count()}};
}

SimilarityConfig similarity_config_from_json(const nlohmann::json& j) {
  SimilarityConfig c;
  if (j.contains("metric")) {
    const auto m = j.at("metric").get<std::string>();
    if (m == "cosine") c.metric = Metric::cosine;
    else if (m == "bm25") c.metric = Metric::bm25;
    else throw std::invalid_argument("unknown metric '" + m + "'");
  }
  if (j.contains("embedder")) {
    const auto e = j.at("embedder").get<std::string>();
    if (e == "hashed_tfidf") c.embedder = EmbedderKind::hashed_tfidf;
    else if (e == "external") c.embedder = EmbedderKind::external;
    else throw std::invalid_argument("unknown embedder '" + e + "'");
  }
  c.dimension = j.value("dimension", c.dimension);
  c.bm25_k1 = j.value("bm25_k1", c.bm25_k1);
  c.bm25_b = j.value("bm25_b", c.bm25_b);
  c.endpoint = j.value("endpoint", c.endpoint);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
  c.validate();
  return c;
}

bool EmbeddingVector::is_zero() const noexcept {
  return std::all_of(values.begin(), values.end(), [](float x) { return x == 0.0f; });
}

std::size_t CorpusStats::df(std::string_view term) const {
  auto it = doc_freq.find(std::string(term));
  return it == doc_freq.end() ? 0 : it->second;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool is_stopword(std::string_view token) {
  static const std::unordered_set<std::string_view> words = {
      "a",    "an",   "and",  "are",   "as",   "at",    "be",   "by",    "for",  "from",
      "has",  "have", "how",  "i",     "in",   "is",    "it",   "its",   "me",   "of",
      "on",   "or",   "that", "the",   "their", "there", "these", "this", "to",   "was",
      "were", "what", "when", "where", "which", "who",  "with", "all",   "each", "any",
      "do",   "does", "did",  "we",    "our",  "my",    "than", "them",  "they", "into",
  };
  return words.count(token) > 0;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

CorpusStats build_corpus_stats(std::span<const std::string> docs) {
  CorpusStats s;
  s.doc_count = docs.size();
  std::size_t total = 0;
  for (const std::string& d : docs) {
    auto toks = tokenize(d);
    total += toks.size();
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& t : toks) ++s.doc_freq[std::move(t)];
  }
  s.avg_doc_len = docs.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs.size());
  return s;
}

double cosine_sim(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dimension() != v.dimension()) {
    throw std::invalid_argument("cosine_sim: dimension mismatch (" + std::to_string(u.dimension()) +
                                " vs " + std::to_string(v.dimension()) + ")");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double a = u.values[i];
    const double b = v.values[i];
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

TermCounts count_terms(std::string_view text) {
  TermCounts tc;
  for (auto& t : tokenize(text)) {
    ++tc.counts[std::move(t)];
    ++tc.length;
  }
  return tc;
}

double bm25_score(std::span<const std::string> query_tokens, const TermCounts& doc,
                  const CorpusStats& stats, const SimilarityConfig& config) {
  const double n_docs = static_cast<double>(stats.doc_count);
  const double avg = stats.avg_doc_len > 0.0 ? stats.avg_doc_len : 1.0;
  const double norm = config.bm25_k1 * (1.0 - config.bm25_b +
                                        config.bm25_b * static_cast<double>(doc.length) / avg);
  double score = 0.0;
  for (const std::string& term : query_tokens) {
    auto it = doc.counts.find(term);
    if (it == doc.counts.end()) continue;
    const double df = static_cast<double>(stats.df(term));
    const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    const double tf = it->second;
    score += idf * tf * (config.bm25_k1 + 1.0) / (tf + norm);
  }
  return score;
}

double bm25_score(std::string_view query, std::string_view doc, const CorpusStats& stats,
                  const SimilarityConfig& config) {
  const auto q = tokenize(query);
  return bm25_score(q, count_terms(doc), stats, config);
}

void normalize(std::vector<float>& values) {
  double ss = 0.0;
  for (float x : values) ss += static_cast<double>(x) * x;
  if (ss == 0.0) return;
  const double inv = 1.0 / std::sqrt(ss);
  for (float& x : values) x = static_cast<float>(x * inv);
}

Embedder::Embedder(SimilarityConfig config, CorpusStats stats,
                   std::shared_ptr<const EmbeddingProvider> provider)
    : config_(std::move(config)), stats_(std::move(stats)), provider_(std::move(provider)) {
  config_.validate();
  if (config_.embedder == EmbedderKind::external && !provider_) {
    throw std::invalid_argument("external embedder selected but no provider configured");
  }
}

double Embedder::idf(std::string_view term) const {
  const double n = static_cast<double>(stats_.doc_count);
  const double df = static_cast<double>(stats_.df(term));
  return std::log((1.0 + n) / (1.0 + df)) + 1.0;
}

EmbeddingVector Embedder::hashed(std::string_view text) const {
  // Ordered map so bucket accumulation order is independent of hash-table layout.
  std::map<std::string, std::uint32_t> tf;
  for (auto& t : tokenize(text)) {
    if (!is_stopword(t)) ++tf[std::move(t)];
  }
  EmbeddingVector v;
  v.values.assign(config_.dimension, 0.0f);
  if (tf.empty()) return v;
  std::vector<double> acc(config_.dimension, 0.0);
  for (const auto& [term, count] : tf) {
    acc[fnv1a64(term) % config_.dimension] += static_cast<double>(count) * idf(term);
  }
  double ss = 0.0;
  for (double x : acc) ss += x * x;
  const double inv = 1.0 / std::sqrt(ss);
  for (std::size_t i = 0; i < acc.size(); ++i) v.values[i] = static_cast<float>(acc[i] * inv);
  return v;
}

EmbeddingVector Embedder::embed(std::string_view text) const {
  if (config_.embedder == EmbedderKind::hashed_tfidf) return hashed(text);
  const std::string owned(text);
  return std::move(embed_batch(std::span<const std::string>(&owned, 1)).front());
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  if (config_.embedder == EmbedderKind::hashed_tfidf) {
    for (const auto& t : texts) out.push_back(hashed(t));
    return out;
  }
  auto raw = provider_->embed(texts);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EmbeddingVector v{std::move(raw[i])};
    // Empty text maps to the zero vector regardless of what the provider returns.
    if (tokenize(texts[i]).empty()) std::fill(v.values.begin(), v.values.end(), 0.0f);
    normalize(v.values);
    out.push_back(std::move(v));
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string url, std::size_t dimension,
                                             std::chrono::milliseconds timeout)
    : dimension_(dimension), timeout_(timeout) {
  const auto scheme = url.find("://");
  const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) {
    host_ = url;
    path_ = "/";
  } else {
    host_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
  if (host_.empty()) throw std::invalid_argument("embedder endpoint URL is empty");
}

std::vector<std::vector<float>> HttpEmbeddingProvider::embed(std::span<const std::string> texts) const {
  httplib::Client client(host_);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());

  nlohmann::json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw EmbeddingTransportError("embedding provider " + host_ + path_ + " unreachable: " +
                                  httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw EmbeddingRejectedError("embedding provider rejected request with HTTP " +
                                 std::to_string(res->status));
  }
  std::vector<std::vector<float>> vectors;
  try {
    vectors = nlohmann::json::parse(res->body).at("vectors").get<std::vector<std::vector<float>>>();
  } catch (const nlohmann::json::exception& e) {
    throw EmbeddingRejectedError(std::string("embedding provider returned malformed payload: ") + e.what());
  }
  if (vectors.size() != texts.size()) {
    throw EmbeddingRejectedError("embedding provider returned " + std::to_string(vectors.size()) +
                                 " vectors for " + std::to_string(texts.size()) + " texts");
  }
  for (const auto& v : vectors) {
    if (v.size() != dimension_) {
      throw EmbeddingRejectedError("embedding provider returned dimension " + std::to_string(v.size()) +
                                   ", expected " + std::to_string(dimension_));
    }
  }
  return vectors;
}

std::shared_ptr<const EmbeddingProvider> make_provider(const SimilarityConfig& config) {
  if (config.embedder != EmbedderKind::external) return nullptr;
  std::string url = config.endpoint;
  if (url.empty()) {
    if (const char* env = std::getenv("CSR_EMBEDDER_URL")) url = env;
  }
  if (url.empty()) {
    throw std::invalid_argument("external embedder needs an endpoint (config or CSR_EMBEDDER_URL)");
  }
  return std::make_shared<HttpEmbeddingProvider>(url, config.dimension, config.timeout);
}

}  // namespace csr
