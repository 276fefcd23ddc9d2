#include "csr/artifacts.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace csr {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("missing artifact file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write artifact file: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ArtifactError("failed writing artifact file: " + path.string());
}

std::uint32_t to_little_endian(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::little) {
    return x;
  } else {
    return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
  }
}

std::string hash_files(const fs::path& dir, const std::vector<std::string>& files) {
  std::string all;
  for (const auto& f : files) all += read_file(dir / f);
  return content_hash(all);
}

std::string entity_name(const SchemaCatalog& catalog, TableId t, ColumnId c) {
  return catalog.table(t).name + "." + catalog.column(c).name;
}

}  // namespace

std::string content_hash(std::string_view bytes) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(bytes);
  return out.str();
}

void write_float_array(const fs::path& path, const std::vector<float>& values, std::size_t dimension,
                       std::size_t count) {
  if (values.size() != dimension * count) throw ArtifactError("float array shape mismatch for " + path.string());
  std::string bytes(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t le = to_little_endian(std::bit_cast<std::uint32_t>(values[i]));
    std::memcpy(bytes.data() + i * 4, &le, 4);
  }
  write_file(path, bytes);
  const nlohmann::json sidecar = {{"dtype", "float32-le"}, {"dimension", dimension}, {"count", count}};
  write_file(fs::path(path.string() + ".json"), sidecar.dump(2) + "\n");
}

std::vector<float> read_float_array(const fs::path& path, std::size_t& dimension, std::size_t& count) {
  const auto sidecar = nlohmann::json::parse(read_file(fs::path(path.string() + ".json")));
  if (sidecar.value("dtype", "") != "float32-le") throw ArtifactError("unsupported dtype in " + path.string());
  dimension = sidecar.at("dimension").get<std::size_t>();
  count = sidecar.at("count").get<std::size_t>();
  const std::string bytes = read_file(path);
  if (bytes.size() != dimension * count * 4) {
    throw ArtifactError(path.string() + ": expected " + std::to_string(dimension * count * 4) + " bytes, found " +
                        std::to_string(bytes.size()));
  }
  std::vector<float> values(dimension * count);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t le;
    std::memcpy(&le, bytes.data() + i * 4, 4);
    values[i] = std::bit_cast<float>(to_little_endian(le));
  }
  return values;
}

IterationSchedule IndexBundle::schedule() const {
  return config.schedule.steps.empty() ? default_schedule(catalog.table_count()) : config.schedule;
}

Manifest write_index(const fs::path& dir, const SchemaCatalog& catalog, const ChunkIndex& chunks,
                     const KnowledgeGraph& graph, const PipelineConfig& config) {
  fs::create_directories(dir);

  write_file(dir / "catalog.json", catalog_to_json(catalog).dump(2) + "\n");

  std::string chunk_lines;
  std::vector<float> chunk_vectors;
  for (const Chunk& c : chunks.chunks()) {
    nlohmann::json tables = nlohmann::json::array();
    for (TableId t : c.relevant.tables) tables.push_back(catalog.table(t).name);
    nlohmann::json columns = nlohmann::json::array();
    for (const auto& [t, col] : c.relevant.columns) columns.push_back(entity_name(catalog, t, col));
    const nlohmann::json j = {{"question", c.question},       {"sql", c.sql},
                              {"tables", std::move(tables)},  {"columns", std::move(columns)},
                              {"manual_override", c.manual_override}, {"contextualized", c.contextualized}};
    chunk_lines += j.dump() + "\n";
    chunk_vectors.insert(chunk_vectors.end(), c.vector.values.begin(), c.vector.values.end());
  }
  write_file(dir / "chunks.jsonl", chunk_lines);
  write_float_array(dir / "chunks.f32", chunk_vectors, chunks.config().dimension, chunks.size());

  std::string graph_lines;
  for (const Triplet& t : graph.triplets()) {
    const nlohmann::json j = {{"column", catalog.column(t.field).name},
                              {"table", catalog.table(t.table).name},
                              {"surface", t.surface}};
    graph_lines += j.dump() + "\n";
  }
  write_file(dir / "graph.jsonl", graph_lines);
  write_float_array(dir / "graph.f32", graph.vectors().data(), graph.config().dimension, graph.size());

  Manifest m;
  m.artifacts = {{"catalog", {"catalog.json"}, ""},
                 {"chunk_index", {"chunks.jsonl", "chunks.f32", "chunks.f32.json"}, ""},
                 {"knowledge_graph", {"graph.jsonl", "graph.f32", "graph.f32.json"}, ""}};
  for (auto& a : m.artifacts) a.content_hash = hash_files(dir, a.files);
  m.schema_version = m.artifacts.front().content_hash;
  PipelineConfig snapshot = config;
  snapshot.similarity = chunks.config();
  m.config = to_json(snapshot);

  nlohmann::json artifacts = nlohmann::json::array();
  for (const auto& a : m.artifacts) {
    artifacts.push_back({{"name", a.name}, {"files", a.files}, {"content_hash", a.content_hash}});
  }
  const nlohmann::json manifest = {{"format_version", m.format_version},
                                   {"schema_version", m.schema_version},
                                   {"artifacts", std::move(artifacts)},
                                   {"config", m.config}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return m;
}

IndexBundle load_index(const fs::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("malformed manifest in " + dir.string() + ": " + e.what());
  }
  const int found = manifest.value("format_version", -1);
  if (found != kArtifactFormatVersion) {
    throw ArtifactError("artifact format version mismatch: expected " + std::to_string(kArtifactFormatVersion) +
                        ", found " + std::to_string(found));
  }

  IndexBundle b;
  b.manifest.format_version = found;
  b.manifest.schema_version = manifest.at("schema_version").get<std::string>();
  b.manifest.config = manifest.at("config");
  for (const auto& a : manifest.at("artifacts")) {
    ArtifactInfo info{a.at("name").get<std::string>(), a.at("files").get<std::vector<std::string>>(),
                      a.at("content_hash").get<std::string>()};
    const std::string actual = hash_files(dir, info.files);
    if (actual != info.content_hash) {
      throw ArtifactError("artifact '" + info.name + "' hash mismatch: manifest " + info.content_hash + ", files " +
                          actual);
    }
    b.manifest.artifacts.push_back(std::move(info));
  }

  b.config = pipeline_config_from_json(b.manifest.config);
  b.catalog = load_catalog(std::string_view(read_file(dir / "catalog.json")));
  const auto provider = make_provider(b.config.similarity);

  std::size_t dim = 0, count = 0;
  {
    const std::vector<float> vectors = read_float_array(dir / "chunks.f32", dim, count);
    if (dim != b.config.similarity.dimension) throw ArtifactError("chunk vector dimension does not match config");
    std::istringstream lines(read_file(dir / "chunks.jsonl"));
    std::vector<Chunk> chunks;
    std::string line;
    while (std::getline(lines, line)) {
      const auto j = nlohmann::json::parse(line);
      Chunk c;
      c.question = j.at("question").get<std::string>();
      c.sql = j.at("sql").get<std::string>();
      c.manual_override = j.value("manual_override", false);
      c.contextualized = j.at("contextualized").get<std::string>();
      for (const auto& name : j.at("tables")) {
        auto t = b.catalog.lookup_table(name.get<std::string>());
        if (!t) throw ArtifactError("chunk references unknown table " + name.get<std::string>());
        c.relevant.tables.insert(*t);
      }
      for (const auto& name : j.at("columns")) {
        const std::string s = name.get<std::string>();
        const auto dot = s.find('.');
        auto t = b.catalog.lookup_table(s.substr(0, dot));
        auto col = t ? b.catalog.find_column(*t, s.substr(dot + 1)) : std::nullopt;
        if (!col) throw ArtifactError("chunk references unknown column " + s);
        c.relevant.columns.emplace(*t, *col);
      }
      const std::size_t i = chunks.size();
      if (i >= count) throw ArtifactError("chunks.jsonl has more lines than chunk vectors");
      c.vector.values.assign(vectors.begin() + static_cast<std::ptrdiff_t>(i * dim),
                             vectors.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
      chunks.push_back(std::move(c));
    }
    if (chunks.size() != count) throw ArtifactError("chunk count does not match chunk vectors");
    b.chunks = ChunkIndex(std::move(chunks), b.config.similarity, provider);
  }
  {
    const std::vector<float> vectors = read_float_array(dir / "graph.f32", dim, count);
    if (dim != b.config.similarity.dimension) throw ArtifactError("graph vector dimension does not match config");
    std::istringstream lines(read_file(dir / "graph.jsonl"));
    std::vector<Triplet> triplets;
    std::vector<EmbeddingVector> vecs;
    std::string line;
    while (std::getline(lines, line)) {
      const auto j = nlohmann::json::parse(line);
      auto t = b.catalog.lookup_table(j.at("table").get<std::string>());
      auto col = t ? b.catalog.find_column(*t, j.at("column").get<std::string>()) : std::nullopt;
      if (!col) throw ArtifactError("graph references unknown column " + line);
      const std::size_t i = triplets.size();
      if (i >= count) throw ArtifactError("graph.jsonl has more lines than graph vectors");
      triplets.push_back({*col, *t, j.at("surface").get<std::string>()});
      vecs.push_back({std::vector<float>(vectors.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                         vectors.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim))});
    }
    if (triplets.size() != count) throw ArtifactError("triplet count does not match graph vectors");
    b.graph = KnowledgeGraph(std::move(triplets), std::move(vecs), b.config.similarity, b.catalog.table_count(),
                             provider);
  }
  return b;
}

}  // namespace csr
