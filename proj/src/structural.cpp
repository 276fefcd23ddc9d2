#include "csr/structural.hpp"

#include <fstream>
#include <stdexcept>

namespace csr {

std::string triplet_surface(const Table& table, const Column& column) {
  std::string s = column.name;
  s += ' ';
  s += kColumnOfRelation;
  s += ' ';
  s += table.name;
  s += '.';
  if (!column.description.empty()) s += " " + column.description;
  if (!table.description.empty()) s += " " + table.description;
  return s;
}

KnowledgeGraph::KnowledgeGraph(std::vector<Triplet> triplets, std::vector<EmbeddingVector> vectors,
                               SimilarityConfig config, std::size_t table_count,
                               std::shared_ptr<const EmbeddingProvider> provider)
    : triplets_(std::move(triplets)), store_(config.dimension) {
  std::vector<std::string> surfaces;
  surfaces.reserve(triplets_.size());
  for (const Triplet& t : triplets_) surfaces.push_back(t.surface);
  embedder_ = Embedder(std::move(config), build_corpus_stats(surfaces), std::move(provider));
  if (vectors.empty() && !surfaces.empty()) vectors = embedder_.embed_batch(surfaces);
  if (vectors.size() != triplets_.size()) {
    throw std::invalid_argument("knowledge graph: vector count does not match triplet count");
  }

  table_rows_.assign(table_count, {0, 0});
  for (std::size_t i = 0; i < triplets_.size(); ++i) {
    const std::size_t t = index_of(triplets_[i].table);
    if (t >= table_count) throw std::invalid_argument("knowledge graph: triplet table out of range");
    if (i > 0 && triplets_[i - 1].table > triplets_[i].table) {
      throw std::invalid_argument("knowledge graph: triplets must be grouped by table");
    }
    if (table_rows_[t].second == 0) table_rows_[t].first = static_cast<std::uint32_t>(i);
    table_rows_[t].second = static_cast<std::uint32_t>(i + 1);
    store_.push_back(vectors[i]);
    terms_.push_back(count_terms(triplets_[i].surface));
  }
}

KnowledgeGraph build_knowledge_graph(const SchemaCatalog& catalog, const SimilarityConfig& config) {
  config.validate();
  std::vector<Triplet> triplets;
  triplets.reserve(catalog.column_count());
  for (const Table& t : catalog.tables()) {
    for (const Column& c : t.columns) triplets.push_back({c.id, t.id, triplet_surface(t, c)});
  }
  return KnowledgeGraph(std::move(triplets), {}, config, catalog.table_count(), make_provider(config));
}

StructuralResult retrieve_structural(const KnowledgeGraph& graph, std::string_view question, std::size_t l,
                                     const TableSet* scope) {
  if (l == 0) throw std::invalid_argument("retrieve_structural: l must be >= 1");

  std::vector<std::uint32_t> rows;
  if (scope) {
    for (TableId t : *scope) {
      const auto [begin, end] = graph.table_rows(t);
      for (std::uint32_t r = begin; r < end; ++r) rows.push_back(r);
    }
  } else {
    rows.resize(graph.size());
    for (std::uint32_t r = 0; r < rows.size(); ++r) rows[r] = r;
  }

  std::vector<double> scores(rows.size());
  if (graph.config().metric == Metric::cosine) {
    const auto q = kernels::sparse_query(graph.embedder().embed(question));
    kernels::cosine_scores(q, graph.vectors(), rows, scores);
  } else {
    const auto q = tokenize(question);
    kernels::bm25_scores(q, graph.term_counts(), graph.embedder().stats(), graph.config(), rows, scores);
  }

  StructuralResult result;
  for (const kernels::Scored& s : kernels::select_top(rows, scores, l)) {
    result.ranked_triplets.emplace_back(s.id, s.score);
    result.tables.insert(graph.triplets()[s.id].table);
  }
  return result;
}

void export_graph_jsonl(const KnowledgeGraph& graph, const SchemaCatalog& catalog,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write graph export: " + path.string());
  for (const Triplet& t : graph.triplets()) {
    nlohmann::json j = {{"column", catalog.column(t.field).name},
                        {"table", catalog.table(t.table).name},
                        {"surface", t.surface}};
    out << j.dump() << '\n';
  }
}

}  // namespace csr
