#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csr/catalog.hpp"
#include "csr/kernels.hpp"
#include "csr/similarity.hpp"
#include "csr/sql.hpp"

namespace csr {

enum class ChunkId : std::uint32_t {};
constexpr std::size_t index_of(ChunkId id) noexcept { return static_cast<std::size_t>(id); }

/// One line of a trace file. `tables` overrides the relevant set derived from the SQL.
struct TracePair {
  std::string question;
  std::string sql;
  std::optional<std::vector<std::string>> tables;
};

std::vector<TracePair> load_trace_file(const std::filesystem::path& path);
void write_trace_file(const std::filesystem::path& path, std::span<const TracePair> trace);

struct Chunk {
  ChunkId id{};
  std::string question;
  std::string sql;
  RelevantSet relevant;
  bool manual_override = false;
  std::string contextualized;
  EmbeddingVector vector;
};

/// How an iteration scope applies to chunk retrieval.
enum class ScopeMode {
  intersect_output,  // rank all chunks, intersect returned tables with the scope
  filter_chunks,     // rank only chunks touching the scope, then intersect
};

class ChunkIndex {
 public:
  ChunkIndex() = default;
  ChunkIndex(std::vector<Chunk> chunks, SimilarityConfig config,
             std::shared_ptr<const EmbeddingProvider> provider = nullptr);

  const std::vector<Chunk>& chunks() const noexcept { return chunks_; }
  std::size_t size() const noexcept { return chunks_.size(); }
  const SimilarityConfig& config() const noexcept { return embedder_.config(); }
  const CorpusStats& corpus_stats() const noexcept { return embedder_.stats(); }
  const Embedder& embedder() const noexcept { return embedder_; }
  const kernels::VectorStore& vectors() const noexcept { return store_; }
  std::span<const TermCounts> term_counts() const noexcept { return terms_; }

 private:
  std::vector<Chunk> chunks_;
  Embedder embedder_;
  kernels::VectorStore store_;
  std::vector<TermCounts> terms_;
};

struct ContextualResult {
  std::vector<std::pair<ChunkId, double>> ranked_chunks;
  TableSet tables;
};

/// q + " | " + table entries joined by " | ". Each entry is "name[: desc]" followed by
/// "; col[(desc)], ..." for the referenced columns; tables and columns in catalog order.
std::string contextualize(std::string_view question, const RelevantSet& relevant,
                          const SchemaCatalog& catalog);
std::string contextualize(std::string_view question, std::string_view sql,
                          const SchemaCatalog& catalog);

/// Labels, contextualizes, and embeds every trace pair. IDF comes from the contextualized texts.
ChunkIndex build_chunk_index(std::span<const TracePair> trace, const SchemaCatalog& catalog,
                             const SimilarityConfig& config);

/// Relevant set of a trace pair, honoring the manual `tables` override.
RelevantSet label_trace_pair(const TracePair& pair, const SchemaCatalog& catalog);

ContextualResult retrieve_contextual(const ChunkIndex& index, std::string_view question, std::size_t k,
                                     const TableSet* scope = nullptr,
                                     ScopeMode mode = ScopeMode::intersect_output);

}  // namespace csr
