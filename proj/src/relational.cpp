#include "csr/relational.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace csr {

void RankingConfig::validate() const {
  if (h == 0) throw std::invalid_argument("ranking h must be >= 1");
}

std::string normalize_key(std::string_view name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::vector<ColumnId> key_columns(const SchemaCatalog& catalog, TableId table) {
  const Table& t = catalog.table(table);
  std::vector<bool> is_key(t.columns.size(), false);
  auto mark = [&](ColumnId c) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      if (t.columns[i].id == c) is_key[i] = true;
    }
  };
  for (std::size_t i = 0; i < t.columns.size(); ++i) is_key[i] = t.columns[i].is_primary_key;
  for (const ForeignKey& fk : t.foreign_keys) mark(fk.from_column);
  for (const Table& other : catalog.tables()) {
    for (const ForeignKey& fk : other.foreign_keys) {
      if (fk.to_table == table) mark(fk.to_column);
    }
  }
  std::vector<ColumnId> out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (is_key[i]) out.push_back(t.columns[i].id);
  }
  if (out.empty()) out.push_back(t.columns.front().id);
  return out;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

Hypergraph build_hypergraph(const TableSet& scope, const SchemaCatalog& catalog, const RankingConfig& config) {
  if (scope.empty()) throw std::invalid_argument("build_hypergraph: empty scope");
  config.validate();

  Hypergraph g;
  std::vector<std::pair<TableId, ColumnId>> keys;
  std::unordered_map<std::size_t, std::size_t> key_slot;  // ColumnId -> index in keys
  for (TableId t : scope) {
    if (index_of(t) >= catalog.table_count()) {
      throw std::invalid_argument("build_hypergraph: table id outside catalog");
    }
    g.nodes.push_back(t);
    for (ColumnId c : key_columns(catalog, t)) {
      key_slot.emplace(index_of(c), keys.size());
      keys.emplace_back(t, c);
    }
  }

  DisjointSets sets(keys.size());
  for (TableId t : scope) {
    for (const ForeignKey& fk : catalog.table(t).foreign_keys) {
      auto from = key_slot.find(index_of(fk.from_column));
      auto to = key_slot.find(index_of(fk.to_column));
      if (from != key_slot.end() && to != key_slot.end()) sets.unite(from->second, to->second);
    }
  }
  std::unordered_map<std::string, std::size_t> first_by_name;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto [it, inserted] = first_by_name.emplace(normalize_key(catalog.column(keys[i].second).name), i);
    if (!inserted) sets.unite(it->second, i);
  }

  // keys are already in (TableId, ColumnId) order, so each root is its group's lowest member.
  std::unordered_map<std::size_t, std::size_t> edge_of_root;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::size_t root = sets.find(i);
    auto [it, inserted] = edge_of_root.emplace(root, g.hyperedges.size());
    if (inserted) {
      g.hyperedges.push_back({normalize_key(catalog.column(keys[root].second).name), {}});
    }
    g.hyperedges[it->second].members.push_back(keys[i]);
  }

  for (TableId t : g.nodes) {
    std::size_t degree = 0;
    for (const Hyperedge& e : g.hyperedges) {
      degree += std::any_of(e.members.begin(), e.members.end(),
                            [&](const auto& m) { return m.first == t; });
    }
    g.weights[t] = config.weight_mode == WeightMode::uniform ? 1.0 : 1.0 + static_cast<double>(degree);
    g.availability[t] = config.unavailable.count(t) == 0;
  }
  return g;
}

std::string render_entity(const Table& table, const Column& column, EntityOperator op) {
  std::string s = table.name + "." + column.name;
  if (op == EntityOperator::concat_with_descriptions) {
    if (!column.description.empty()) s += " | " + column.description;
    if (!table.description.empty()) s += " | " + table.description;
  }
  return s;
}

std::vector<SemanticEntity> hypergraph_rank(const Hypergraph& graph, const SchemaCatalog& catalog,
                                            std::string_view question, const RankingConfig& config,
                                            const Embedder& embedder) {
  config.validate();
  const EmbeddingVector q = embedder.embed(question);

  std::vector<SemanticEntity> scored;
  for (const Hyperedge& e : graph.hyperedges) {
    for (const auto& [t, c] : e.members) {
      auto avail = graph.availability.find(t);
      if (avail != graph.availability.end() && !avail->second) continue;
      SemanticEntity ent;
      ent.table = t;
      ent.column = c;
      ent.surface = render_entity(catalog.table(t), catalog.column(c), config.op);
      const double upsilon = cosine_sim(q, embedder.embed(ent.surface));
      const double w = graph.weights.at(t);
      ent.score = w > 0.0 ? upsilon / w : 0.0;
      scored.push_back(std::move(ent));
    }
  }
  const std::size_t keep = std::min(config.h, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [](const SemanticEntity& a, const SemanticEntity& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return std::pair(a.table, a.column) < std::pair(b.table, b.column);
                    });
  scored.resize(keep);
  return scored;
}

nlohmann::json hypergraph_to_json(const Hypergraph& graph, const SchemaCatalog& catalog) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Hyperedge& e : graph.hyperedges) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& [t, c] : e.members) members.push_back(catalog.table(t).name + "." + catalog.column(c).name);
    edges.push_back({{"key", e.key}, {"members", std::move(members)}});
  }
  nlohmann::json nodes = nlohmann::json::array();
  for (TableId t : graph.nodes) {
    nodes.push_back({{"table", catalog.table(t).name},
                     {"weight", graph.weights.at(t)},
                     {"available", graph.availability.at(t)}});
  }
  return {{"nodes", std::move(nodes)}, {"hyperedges", std::move(edges)}};
}

}  // namespace csr
