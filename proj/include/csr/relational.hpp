#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "csr/catalog.hpp"
#include "csr/similarity.hpp"

namespace csr {

enum class EntityOperator { concat_names, concat_with_descriptions };
enum class WeightMode { uniform, hyperedge_degree };

struct RankingConfig {
  std::size_t h = 20;
  EntityOperator op = EntityOperator::concat_names;
  WeightMode weight_mode = WeightMode::uniform;
  TableSet unavailable;  // tables whose entities are skipped

  void validate() const;
};

/// A join group: key columns across scope tables that are joined on together.
struct Hyperedge {
  std::string key;  // normalized name of the lowest (TableId, ColumnId) member
  std::vector<std::pair<TableId, ColumnId>> members;  // sorted ascending

  bool operator==(const Hyperedge&) const = default;
};

struct Hypergraph {
  std::vector<TableId> nodes;  // ascending
  std::vector<Hyperedge> hyperedges;
  std::map<TableId, double> weights;
  std::map<TableId, bool> availability;
};

struct SemanticEntity {
  TableId table{};
  ColumnId column{};
  std::string surface;
  double score = 0.0;

  bool operator==(const SemanticEntity&) const = default;
};

/// Lowercase with non-alphanumerics removed: "Customer_ID" -> "customerid".
std::string normalize_key(std::string_view name);

/// Columns that take part in joins: primary keys and both ends of every foreign key.
/// A table with none of these contributes its first column as a surrogate key.
std::vector<ColumnId> key_columns(const SchemaCatalog& catalog, TableId table);

/// Union-find over foreign-key endpoints inside the scope and same-named key columns.
/// Throws std::invalid_argument for an empty scope or unknown tables.
Hypergraph build_hypergraph(const TableSet& scope, const SchemaCatalog& catalog, const RankingConfig& config);

/// "<table>.<column>", optionally followed by " | <column desc>" and " | <table desc>".
std::string render_entity(const Table& table, const Column& column, EntityOperator op);

/// Scores every available (node, hyperedge) incidence by cosine(question, entity) / w_v
/// (0 when w_v <= 0), ranks descending with ties by (TableId, ColumnId), keeps the first h.
std::vector<SemanticEntity> hypergraph_rank(const Hypergraph& graph, const SchemaCatalog& catalog,
                                            std::string_view question, const RankingConfig& config,
                                            const Embedder& embedder);

nlohmann::json hypergraph_to_json(const Hypergraph& graph, const SchemaCatalog& catalog);

}  // namespace csr
