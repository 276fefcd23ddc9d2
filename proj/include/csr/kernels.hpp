#pragma once

// Exhaustive scoring kernels. Each kernel has a serial reference and an OpenMP variant that
// produce bit-identical scores: every candidate is scored independently with the same
// arithmetic, so only the work split differs.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csr/similarity.hpp"

namespace csr::kernels {

/// Row-major float vectors with per-row L2 norms cached at insertion.
class VectorStore {
 public:
  explicit VectorStore(std::size_t dimension = 0) : dimension_(dimension) {}

  void push_back(const EmbeddingVector& v);
  std::size_t size() const noexcept { return norms_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dimension_, dimension_};
  }
  double norm(std::size_t i) const { return norms_[i]; }
  EmbeddingVector vector(std::size_t i) const;
  const std::vector<float>& data() const noexcept { return data_; }

 private:
  std::size_t dimension_;
  std::vector<float> data_;
  std::vector<double> norms_;
};

/// Nonzero coordinates of a query, ascending by index.
struct SparseQuery {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
  double norm = 0.0;
  std::size_t dimension = 0;
};
SparseQuery sparse_query(const EmbeddingVector& v);

/// out[i] = cosine(query, store.row(rows[i])), equal bit-for-bit to cosine_sim.
void cosine_scores_serial(const SparseQuery& query, const VectorStore& store,
                          std::span<const std::uint32_t> rows, std::span<double> out);
void cosine_scores_parallel(const SparseQuery& query, const VectorStore& store,
                            std::span<const std::uint32_t> rows, std::span<double> out);
/// Picks the OpenMP variant for large candidate sets outside an enclosing parallel region.
void cosine_scores(const SparseQuery& query, const VectorStore& store,
                   std::span<const std::uint32_t> rows, std::span<double> out);

void bm25_scores_serial(std::span<const std::string> query_tokens, std::span<const TermCounts> docs,
                        const CorpusStats& stats, const SimilarityConfig& config,
                        std::span<const std::uint32_t> rows, std::span<double> out);
void bm25_scores_parallel(std::span<const std::string> query_tokens, std::span<const TermCounts> docs,
                          const CorpusStats& stats, const SimilarityConfig& config,
                          std::span<const std::uint32_t> rows, std::span<double> out);
void bm25_scores(std::span<const std::string> query_tokens, std::span<const TermCounts> docs,
                 const CorpusStats& stats, const SimilarityConfig& config,
                 std::span<const std::uint32_t> rows, std::span<double> out);

struct Scored {
  std::uint32_t id;
  double score;
  bool operator==(const Scored&) const = default;
};

/// Strict ranking order: higher score first, then lower id.
constexpr bool ranks_before(const Scored& a, const Scored& b) noexcept {
  return a.score != b.score ? a.score > b.score : a.id < b.id;
}

/// Bounded top-k over (ids[i], scores[i]); k >= size returns everything, fully ranked.
std::vector<Scored> select_top(std::span<const std::uint32_t> ids, std::span<const double> scores,
                               std::size_t k);

inline constexpr std::size_t kParallelThreshold = 2048;

}  // namespace csr::kernels
