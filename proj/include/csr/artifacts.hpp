#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "csr/catalog.hpp"
#include "csr/contextual.hpp"
#include "csr/pipeline.hpp"
#include "csr/structural.hpp"

namespace csr {

inline constexpr int kArtifactFormatVersion = 1;

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ArtifactInfo {
  std::string name;
  std::vector<std::string> files;
  std::string content_hash;  // FNV-1a 64 over the files' bytes in listed order, hex
};

struct Manifest {
  int format_version = kArtifactFormatVersion;
  std::string schema_version;  // content hash of the catalog artifact
  std::vector<ArtifactInfo> artifacts;
  nlohmann::json config;
};

/// A loaded index directory. Retrieval state is immutable once loaded.
struct IndexBundle {
  SchemaCatalog catalog;
  ChunkIndex chunks;
  KnowledgeGraph graph;
  PipelineConfig config;
  Manifest manifest;

  PipelineInputs inputs() const { return {catalog, chunks, graph}; }
  IterationSchedule schedule() const;
};

std::string content_hash(std::string_view bytes);

/// Writes catalog.json, chunks.jsonl + chunks.f32, graph.jsonl + graph.f32 (raw float32
/// little-endian, with .json sidecars for dimension and count) and manifest.json.
Manifest write_index(const std::filesystem::path& dir, const SchemaCatalog& catalog, const ChunkIndex& chunks,
                     const KnowledgeGraph& graph, const PipelineConfig& config);

/// Fails fast with ArtifactError on version mismatch, missing files, or hash mismatch.
IndexBundle load_index(const std::filesystem::path& dir);

void write_float_array(const std::filesystem::path& path, const std::vector<float>& values, std::size_t dimension,
                       std::size_t count);
std::vector<float> read_float_array(const std::filesystem::path& path, std::size_t& dimension, std::size_t& count);

}  // namespace csr
