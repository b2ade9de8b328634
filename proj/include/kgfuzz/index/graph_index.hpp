#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgfuzz/common/io.hpp"
#include "kgfuzz/graph/knowledge_graph.hpp"
#include "kgfuzz/index/embedder.hpp"

namespace kgfuzz {

enum class ChunkKind { NL, Code };
std::string_view to_string(ChunkKind kind) noexcept;

struct Chunk {
  std::string chunk_id;
  std::string origin_node;
  ChunkKind kind = ChunkKind::NL;
  std::string text;
  bool operator==(const Chunk&) const = default;
};

struct IndexEntry {
  Chunk chunk;
  std::vector<float> vector;
  bool operator==(const IndexEntry&) const = default;
};

/// Embedding index over graph-derived chunks of a single kind. Vectors are kept in one
/// row-major matrix so a query is a single contiguous cosine scan.
class PropertyGraphIndex {
 public:
  PropertyGraphIndex(ChunkKind kind, std::size_t dim, std::string embedder_fingerprint);

  /// Throws Error(EmbedderFailure) on a kind, dimension or finiteness mismatch.
  void add(Chunk chunk, std::vector<float> vector);

  ChunkKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& embedder_fingerprint() const noexcept { return fingerprint_; }
  const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
  std::span<const float> matrix() const noexcept { return matrix_; }
  std::size_t size() const noexcept { return entries_.size(); }

  bool operator==(const PropertyGraphIndex& o) const {
    return kind_ == o.kind_ && dim_ == o.dim_ && fingerprint_ == o.fingerprint_ && entries_ == o.entries_;
  }

 private:
  ChunkKind kind_;
  std::size_t dim_;
  std::string fingerprint_;
  std::vector<IndexEntry> entries_;
  std::vector<float> matrix_;
};

struct RetrievalParams {
  double similarity_threshold = 0.0;  // s
  std::size_t top_k = 8;              // k
};

struct ScoredChunk {
  Chunk chunk;
  double score = 0.0;
};

/// Similarity resolution: scores are rounded to this grid before thresholding and ranking,
/// so ties are decided by chunk_id rather than by last-bit rounding differences.
inline constexpr double kScoreResolution = 1e-12;
double quantize_score(double score) noexcept;

/// NL index: one chunk per function node (summary + signature) and per file node
/// (path + summary). Code index: one chunk per function node (source). Embeds on up to
/// `workers` threads. Errors: IndexEmpty; EmbedderFailure(chunk_id).
std::pair<PropertyGraphIndex, PropertyGraphIndex> build_indexes(const CodeKnowledgeGraph& graph, Embedder& embedder,
                                                                std::size_t workers = 1);

/// Up to k chunks with similarity >= s, by descending similarity then ascending chunk_id.
std::vector<ScoredChunk> retrieve_chunks(std::string_view query, const PropertyGraphIndex& index,
                                         const RetrievalParams& params, Embedder& embedder);
std::vector<ScoredChunk> retrieve_by_vector(std::span<const float> query, const PropertyGraphIndex& index,
                                            const RetrievalParams& params);

json to_json(const PropertyGraphIndex& index);
PropertyGraphIndex index_from_json(const json& j, std::string_view expected_fingerprint);
void save_index(const PropertyGraphIndex& index, const std::filesystem::path& path);
/// Errors: IoError; FingerprintMismatch when the file was built with another embedder.
PropertyGraphIndex load_index(const std::filesystem::path& path, std::string_view expected_fingerprint);

}  // namespace kgfuzz
