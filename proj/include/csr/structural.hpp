#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "csr/catalog.hpp"
#include "csr/kernels.hpp"
#include "csr/similarity.hpp"

namespace csr {

inline constexpr std::string_view kColumnOfRelation = "is a column of";

struct Triplet {
  ColumnId field{};
  TableId table{};
  std::string surface;

  bool operator==(const Triplet&) const = default;
};

/// One (column, "is a column of", table) triplet per catalog column, grouped by table in
/// (TableId, ColumnId) order.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  KnowledgeGraph(std::vector<Triplet> triplets, std::vector<EmbeddingVector> vectors,
                 SimilarityConfig config, std::size_t table_count,
                 std::shared_ptr<const EmbeddingProvider> provider = nullptr);

  const std::vector<Triplet>& triplets() const noexcept { return triplets_; }
  std::size_t size() const noexcept { return triplets_.size(); }
  const kernels::VectorStore& vectors() const noexcept { return store_; }
  std::span<const TermCounts> term_counts() const noexcept { return terms_; }
  const Embedder& embedder() const noexcept { return embedder_; }
  const SimilarityConfig& config() const noexcept { return embedder_.config(); }
  /// Triplet rows owned by a table; contiguous.
  std::pair<std::uint32_t, std::uint32_t> table_rows(TableId t) const { return table_rows_.at(index_of(t)); }

 private:
  std::vector<Triplet> triplets_;
  Embedder embedder_;
  kernels::VectorStore store_;
  std::vector<TermCounts> terms_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> table_rows_;
};

struct StructuralResult {
  std::vector<std::pair<std::size_t, double>> ranked_triplets;  // (triplet index, score)
  TableSet tables;
};

/// "<column> is a column of <table>. <column description> <table description>", trimmed.
std::string triplet_surface(const Table& table, const Column& column);

/// IDF for the graph embedder comes from the triplet surfaces.
KnowledgeGraph build_knowledge_graph(const SchemaCatalog& catalog, const SimilarityConfig& config);

StructuralResult retrieve_structural(const KnowledgeGraph& graph, std::string_view question, std::size_t l,
                                     const TableSet* scope = nullptr);

void export_graph_jsonl(const KnowledgeGraph& graph, const SchemaCatalog& catalog,
                        const std::filesystem::path& path);

}  // namespace csr
