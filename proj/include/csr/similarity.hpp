#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace csr {

enum class Metric { cosine, bm25 };
enum class EmbedderKind { hashed_tfidf, external };

struct SimilarityConfig {
  Metric metric = Metric::cosine;
  EmbedderKind embedder = EmbedderKind::hashed_tfidf;
  std::size_t dimension = 1024;
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;
  std::string endpoint;  // external embedder URL, e.g. http://127.0.0.1:9000/embed
  std::chrono::milliseconds timeout{500};

  /// Throws std::invalid_argument.
  void validate() const;
};

nlohmann::json to_json(const SimilarityConfig& config);
SimilarityConfig similarity_config_from_json(const nlohmann::json& j);

struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dimension() const noexcept { return values.size(); }
  bool is_zero() const noexcept;
  bool operator==(const EmbeddingVector&) const = default;
};

struct CorpusStats {
  std::size_t doc_count = 0;
  double avg_doc_len = 0.0;
  std::unordered_map<std::string, std::size_t> doc_freq;

  std::size_t df(std::string_view term) const;
};

/// Lowercase, split on non-alphanumeric, drop empty tokens.
std::vector<std::string> tokenize(std::string_view text);
bool is_stopword(std::string_view token);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);

CorpusStats build_corpus_stats(std::span<const std::string> docs);

/// dot(u,v) / (|u||v|) accumulated in double in index order; 0 when either side is zero.
double cosine_sim(const EmbeddingVector& u, const EmbeddingVector& v);

/// Okapi BM25 with idf = ln(1 + (N - n + 0.5) / (n + 0.5)), summed over query tokens.
double bm25_score(std::string_view query, std::string_view doc, const CorpusStats& stats,
                  const SimilarityConfig& config);

/// Per-document term counts, the form BM25 scoring works from.
struct TermCounts {
  std::unordered_map<std::string, std::uint32_t> counts;
  std::size_t length = 0;
};
TermCounts count_terms(std::string_view text);
double bm25_score(std::span<const std::string> query_tokens, const TermCounts& doc,
                  const CorpusStats& stats, const SimilarityConfig& config);

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// The provider could not be reached or did not answer in time.
class EmbeddingTransportError : public EmbeddingError {
 public:
  using EmbeddingError::EmbeddingError;
};
/// The provider answered but refused the request or returned an unusable payload.
class EmbeddingRejectedError : public EmbeddingError {
 public:
  using EmbeddingError::EmbeddingError;
};

/// Source of raw vectors for the external embedder slot.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<std::vector<float>> embed(std::span<const std::string> texts) const = 0;
};

/// POST {"texts": [...]} -> {"vectors": [[...]]}. Safe to share across threads.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string url, std::size_t dimension, std::chrono::milliseconds timeout);
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) const override;

 private:
  std::string host_;
  std::string path_;
  std::size_t dimension_;
  std::chrono::milliseconds timeout_;
};

/// Turns text into unit-norm vectors. The hashed TF-IDF variant feature-hashes non-stopword
/// tokens (FNV-1a) into `dimension` buckets weighted by tf * idf, idf from `stats`.
class Embedder {
 public:
  Embedder() = default;
  Embedder(SimilarityConfig config, CorpusStats stats,
           std::shared_ptr<const EmbeddingProvider> provider = nullptr);

  EmbeddingVector embed(std::string_view text) const;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;

  const SimilarityConfig& config() const noexcept { return config_; }
  const CorpusStats& stats() const noexcept { return stats_; }
  double idf(std::string_view term) const;

 private:
  EmbeddingVector hashed(std::string_view text) const;

  SimilarityConfig config_;
  CorpusStats stats_;
  std::shared_ptr<const EmbeddingProvider> provider_;
};

/// Provider for config.embedder == external: honors config.endpoint, falling back to the
/// CSR_EMBEDDER_URL environment variable. Returns nullptr for the built-in embedder.
std::shared_ptr<const EmbeddingProvider> make_provider(const SimilarityConfig& config);

void normalize(std::vector<float>& values);

}  // namespace csr
