#include "csr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <omp.h>

namespace csr::kernels {

void VectorStore::push_back(const EmbeddingVector& v) {
  if (v.dimension() != dimension_) {
    throw std::invalid_argument("VectorStore: dimension mismatch (" + std::to_string(v.dimension()) +
                                " vs " + std::to_string(dimension_) + ")");
  }
  data_.insert(data_.end(), v.values.begin(), v.values.end());
  double ss = 0.0;
  for (float x : v.values) ss += static_cast<double>(x) * static_cast<double>(x);
  norms_.push_back(std::sqrt(ss));
}

EmbeddingVector VectorStore::vector(std::size_t i) const {
  auto r = row(i);
  return EmbeddingVector{std::vector<float>(r.begin(), r.end())};
}

SparseQuery sparse_query(const EmbeddingVector& v) {
  SparseQuery q;
  q.dimension = v.dimension();
  double ss = 0.0;
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    const double x = v.values[i];
    ss += x * x;
    if (x != 0.0) {
      q.index.push_back(static_cast<std::uint32_t>(i));
      q.value.push_back(x);
    }
  }
  q.norm = std::sqrt(ss);
  return q;
}

namespace {

void check_shapes(const SparseQuery& q, const VectorStore& store, std::span<const std::uint32_t> rows,
                  std::span<double> out) {
  if (q.dimension != store.dimension()) throw std::invalid_argument("cosine_scores: dimension mismatch");
  if (rows.size() != out.size()) throw std::invalid_argument("cosine_scores: output size mismatch");
}

// Zero query coordinates contribute exact zeros to the dense dot product, so skipping
// them leaves the index-ordered double sum unchanged.
inline double cosine_one(const SparseQuery& q, const VectorStore& store, std::uint32_t r) {
  const double rn = store.norm(r);
  if (q.norm == 0.0 || rn == 0.0) return 0.0;
  const float* row = store.row(r).data();
  double dot = 0.0;
  for (std::size_t j = 0; j < q.index.size(); ++j) {
    dot += q.value[j] * static_cast<double>(row[q.index[j]]);
  }
  return dot / (q.norm * rn);
}

}  // namespace

void cosine_scores_serial(const SparseQuery& query, const VectorStore& store,
                          std::span<const std::uint32_t> rows, std::span<double> out) {
  check_shapes(query, store, rows, out);
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = cosine_one(query, store, rows[i]);
}

void cosine_scores_parallel(const SparseQuery& query, const VectorStore& store,
                            std::span<const std::uint32_t> rows, std::span<double> out) {
  check_shapes(query, store, rows, out);
  const auto n = static_cast<std::int64_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = cosine_one(query, store, rows[i]);
}

void cosine_scores(const SparseQuery& query, const VectorStore& store,
                   std::span<const std::uint32_t> rows, std::span<double> out) {
  if (rows.size() >= kParallelThreshold && omp_get_max_threads() > 1 && !omp_in_parallel()) {
    cosine_scores_parallel(query, store, rows, out);
  } else {
    cosine_scores_serial(query, store, rows, out);
  }
}

void bm25_scores_serial(std::span<const std::string> query_tokens, std::span<const TermCounts> docs,
                        const CorpusStats& stats, const SimilarityConfig& config,
                        std::span<const std::uint32_t> rows, std::span<double> out) {
  if (rows.size() != out.size()) throw std::invalid_argument("bm25_scores: output size mismatch");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[i] = bm25_score(query_tokens, docs[rows[i]], stats, config);
  }
}

void bm25_scores_parallel(std::span<const std::string> query_tokens, std::span<const TermCounts> docs,
                          const CorpusStats& stats, const SimilarityConfig& config,
                          std::span<const std::uint32_t> rows, std::span<double> out) {
  if (rows.size() != out.size()) throw std::invalid_argument("bm25_scores: output size mismatch");
  const auto n = static_cast<std::int64_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = bm25_score(query_tokens, docs[rows[i]], stats, config);
  }
}

void bm25_scores(std::span<const std::string> query_tokens, std::span<const TermCounts> docs,
                 const CorpusStats& stats, const SimilarityConfig& config,
                 std::span<const std::uint32_t> rows, std::span<double> out) {
  if (rows.size() >= kParallelThreshold && omp_get_max_threads() > 1 && !omp_in_parallel()) {
    bm25_scores_parallel(query_tokens, docs, stats, config, rows, out);
  } else {
    bm25_scores_serial(query_tokens, docs, stats, config, rows, out);
  }
}

std::vector<Scored> select_top(std::span<const std::uint32_t> ids, std::span<const double> scores,
                               std::size_t k) {
  if (ids.size() != scores.size()) throw std::invalid_argument("select_top: size mismatch");
  std::vector<Scored> all(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) all[i] = {ids[i], scores[i]};
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), ranks_before);
  all.resize(keep);
  return all;
}

}  // namespace csr::kernels
