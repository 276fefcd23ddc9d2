#include "csr/contextual.hpp"

#include <algorithm>
#include <fstream>

namespace csr {

std::vector<TracePair> load_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path.string());
  std::vector<TracePair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TracePair p;
      p.question = j.at("question").get<std::string>();
      p.sql = j.at("sql").get<std::string>();
      if (auto it = j.find("tables"); it != j.end() && !it->is_null()) {
        p.tables = it->get<std::vector<std::string>>();
      }
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_trace_file(const std::filesystem::path& path, std::span<const TracePair> trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file: " + path.string());
  for (const TracePair& p : trace) {
    nlohmann::json j = {{"question", p.question}, {"sql", p.sql}};
    if (p.tables) j["tables"] = *p.tables;
    out << j.dump() << '\n';
  }
}

std::string contextualize(std::string_view question, const RelevantSet& relevant,
                          const SchemaCatalog& catalog) {
  std::string out(question);
  out += " | ";
  bool first_table = true;
  for (TableId tid : relevant.tables) {
    const Table& t = catalog.table(tid);
    if (!first_table) out += " | ";
    first_table = false;
    out += t.name;
    if (!t.description.empty()) out += ": " + t.description;
    bool first_col = true;
    for (const Column& c : t.columns) {
      if (!relevant.columns.count({tid, c.id})) continue;
      out += first_col ? "; " : ", ";
      first_col = false;
      out += c.name;
      if (!c.description.empty()) out += "(" + c.description + ")";
    }
  }
  return out;
}

std::string contextualize(std::string_view question, std::string_view sql, const SchemaCatalog& catalog) {
  return contextualize(question, extract_relevant_set(sql, catalog), catalog);
}

RelevantSet label_trace_pair(const TracePair& pair, const SchemaCatalog& catalog) {
  RelevantSet extracted = extract_relevant_set(pair.sql, catalog);
  if (!pair.tables) return extracted;
  RelevantSet out;
  for (const std::string& name : *pair.tables) {
    auto t = catalog.lookup_table(name);
    if (!t) throw std::runtime_error("trace override names unknown table '" + name + "'");
    out.tables.insert(*t);
  }
  for (const auto& col : extracted.columns) {
    if (out.tables.count(col.first)) out.columns.insert(col);
  }
  return out;
}

ChunkIndex::ChunkIndex(std::vector<Chunk> chunks, SimilarityConfig config,
                       std::shared_ptr<const EmbeddingProvider> provider)
    : chunks_(std::move(chunks)), store_(config.dimension) {
  if (chunks_.empty()) throw std::invalid_argument("chunk index needs at least one chunk");
  std::vector<std::string> texts;
  texts.reserve(chunks_.size());
  for (const Chunk& c : chunks_) texts.push_back(c.contextualized);
  embedder_ = Embedder(std::move(config), build_corpus_stats(texts), std::move(provider));

  std::vector<std::string> missing;
  std::vector<std::size_t> missing_pos;
  for (std::size_t i = 0; i < chunks_.size(); ++i) {
    chunks_[i].id = static_cast<ChunkId>(i);
    if (chunks_[i].vector.values.empty()) {
      missing.push_back(chunks_[i].contextualized);
      missing_pos.push_back(i);
    }
  }
  if (!missing.empty()) {
    auto vectors = embedder_.embed_batch(missing);
    for (std::size_t j = 0; j < missing_pos.size(); ++j) chunks_[missing_pos[j]].vector = std::move(vectors[j]);
  }
  terms_.reserve(chunks_.size());
  for (const Chunk& c : chunks_) {
    store_.push_back(c.vector);
    terms_.push_back(count_terms(c.contextualized));
  }
}

ChunkIndex build_chunk_index(std::span<const TracePair> trace, const SchemaCatalog& catalog,
                             const SimilarityConfig& config) {
  if (trace.empty()) throw std::invalid_argument("cannot build a chunk index from an empty trace");
  config.validate();
  std::vector<Chunk> chunks;
  chunks.reserve(trace.size());
  for (const TracePair& p : trace) {
    Chunk c;
    c.question = p.question;
    c.sql = p.sql;
    c.relevant = label_trace_pair(p, catalog);
    c.manual_override = p.tables.has_value();
    c.contextualized = contextualize(p.question, c.relevant, catalog);
    chunks.push_back(std::move(c));
  }
  return ChunkIndex(std::move(chunks), config, make_provider(config));
}

ContextualResult retrieve_contextual(const ChunkIndex& index, std::string_view question, std::size_t k,
                                     const TableSet* scope, ScopeMode mode) {
  if (k == 0) throw std::invalid_argument("retrieve_contextual: k must be >= 1");

  std::vector<std::uint32_t> rows;
  rows.reserve(index.size());
  for (const Chunk& c : index.chunks()) {
    if (scope && mode == ScopeMode::filter_chunks) {
      const bool touches = std::any_of(c.relevant.tables.begin(), c.relevant.tables.end(),
                                       [&](TableId t) { return scope->count(t) > 0; });
      if (!touches) continue;
    }
    rows.push_back(static_cast<std::uint32_t>(index_of(c.id)));
  }

  std::vector<double> scores(rows.size());
  if (index.config().metric == Metric::cosine) {
    const auto q = kernels::sparse_query(index.embedder().embed(question));
    kernels::cosine_scores(q, index.vectors(), rows, scores);
  } else {
    const auto q = tokenize(question);
    kernels::bm25_scores(q, index.term_counts(), index.corpus_stats(), index.config(), rows, scores);
  }

  ContextualResult result;
  for (const kernels::Scored& s : kernels::select_top(rows, scores, k)) {
    result.ranked_chunks.emplace_back(static_cast<ChunkId>(s.id), s.score);
    for (TableId t : index.chunks()[s.id].relevant.tables) {
      if (!scope || scope->count(t)) result.tables.insert(t);
    }
  }
  return result;
}

}  // namespace csr
