#include "kgfuzz/index/graph_index.hpp"

#include <algorithm>
#include <cmath>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/parallel.hpp"
#include "kgfuzz/simd/similarity.hpp"

namespace kgfuzz {

std::string_view to_string(ChunkKind kind) noexcept { return kind == ChunkKind::NL ? "NL" : "Code"; }

PropertyGraphIndex::PropertyGraphIndex(ChunkKind kind, std::size_t dim, std::string embedder_fingerprint)
    : kind_(kind), dim_(dim), fingerprint_(std::move(embedder_fingerprint)) {}

void PropertyGraphIndex::add(Chunk chunk, std::vector<float> vector) {
  if (chunk.kind != kind_) throw Error(Errc::EmbedderFailure, chunk.chunk_id + ": chunk kind differs from index kind");
  if (chunk.text.empty()) throw Error(Errc::EmbedderFailure, chunk.chunk_id + ": empty chunk text");
  if (vector.size() != dim_) {
    throw Error(Errc::EmbedderFailure, chunk.chunk_id + ": vector dim " + std::to_string(vector.size()) +
                                           " != " + std::to_string(dim_));
  }
  for (float v : vector) {
    if (!std::isfinite(v)) throw Error(Errc::EmbedderFailure, chunk.chunk_id + ": non-finite embedding");
  }
  matrix_.insert(matrix_.end(), vector.begin(), vector.end());
  entries_.push_back({std::move(chunk), std::move(vector)});
}

double quantize_score(double score) noexcept { return std::round(score / kScoreResolution) * kScoreResolution; }

std::pair<PropertyGraphIndex, PropertyGraphIndex> build_indexes(const CodeKnowledgeGraph& graph, Embedder& embedder,
                                                                std::size_t workers) {
  std::vector<Chunk> nl;
  std::vector<Chunk> code;
  for (const auto& [id, node] : graph.nodes) {
    if (const auto* fn = std::get_if<FunctionNode>(&node)) {
      std::string nl_text = fn->summary.empty() ? fn->signature : fn->summary + "\n" + fn->signature;
      nl.push_back({"nl:" + id, id, ChunkKind::NL, std::move(nl_text)});
      code.push_back({"code:" + id, id, ChunkKind::Code, fn->source_code});
    } else if (const auto* f = std::get_if<FileNode>(&node)) {
      nl.push_back({"nl:" + id, id, ChunkKind::NL, f->summary.empty() ? f->path : f->path + "\n" + f->summary});
    }
  }
  if (nl.empty()) throw Error(Errc::IndexEmpty, "graph has no function or file nodes");

  std::vector<Chunk*> all;
  for (auto& c : nl) all.push_back(&c);
  for (auto& c : code) all.push_back(&c);
  std::vector<std::vector<float>> vectors(all.size());
  parallel_for(all.size(), workers, [&](std::size_t i) {
    try {
      vectors[i] = embedder.embed(all[i]->text);
    } catch (const Error& e) {
      if (e.code() == Errc::EmbedderFailure) throw Error(Errc::EmbedderFailure, all[i]->chunk_id + ": " + e.detail());
      throw;
    } catch (const std::exception& e) {
      throw Error(Errc::EmbedderFailure, all[i]->chunk_id + ": " + e.what());
    }
  });

  PropertyGraphIndex nl_index(ChunkKind::NL, embedder.dim(), embedder.fingerprint());
  PropertyGraphIndex code_index(ChunkKind::Code, embedder.dim(), embedder.fingerprint());
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& target = i < nl.size() ? nl_index : code_index;
    target.add(std::move(*all[i]), std::move(vectors[i]));
  }
  return {std::move(nl_index), std::move(code_index)};
}

std::vector<ScoredChunk> retrieve_by_vector(std::span<const float> query, const PropertyGraphIndex& index,
                                            const RetrievalParams& params) {
  if (params.top_k == 0) throw Error(Errc::ConfigError, "top_k must be >= 1");
  if (query.size() != index.dim()) {
    throw Error(Errc::EmbedderFailure, "query dim " + std::to_string(query.size()) + " != index dim " +
                                           std::to_string(index.dim()));
  }
  std::vector<double> scores(index.size());
  simd::cosine_scan(query, index.matrix(), index.dim(), scores);

  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = quantize_score(scores[i]);
    if (scores[i] >= params.similarity_threshold) hits.push_back(i);
  }
  const auto& entries = index.entries();
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return entries[a].chunk.chunk_id < entries[b].chunk.chunk_id;
  };
  const std::size_t k = std::min(params.top_k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
  std::vector<ScoredChunk> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({entries[hits[i]].chunk, scores[hits[i]]});
  return out;
}

std::vector<ScoredChunk> retrieve_chunks(std::string_view query, const PropertyGraphIndex& index,
                                         const RetrievalParams& params, Embedder& embedder) {
  const auto vec = embedder.embed(query);
  return retrieve_by_vector(vec, index, params);
}

json to_json(const PropertyGraphIndex& index) {
  json entries = json::array();
  for (const auto& e : index.entries()) {
    entries.push_back({{"chunk_id", e.chunk.chunk_id},
                       {"origin_node", e.chunk.origin_node},
                       {"text", e.chunk.text},
                       {"vector", e.vector}});
  }
  return {{"kind", to_string(index.kind())},
          {"dim", index.dim()},
          {"embedder_fingerprint", index.embedder_fingerprint()},
          {"entries", entries}};
}

PropertyGraphIndex index_from_json(const json& j, std::string_view expected_fingerprint) {
  try {
    const std::string fp = j.at("embedder_fingerprint");
    if (fp != expected_fingerprint) {
      throw Error(Errc::FingerprintMismatch, "index built with " + fp + ", configured embedder is " +
                                                 std::string(expected_fingerprint));
    }
    const ChunkKind kind = j.at("kind") == "NL" ? ChunkKind::NL : ChunkKind::Code;
    PropertyGraphIndex index(kind, j.at("dim").get<std::size_t>(), fp);
    for (const auto& e : j.at("entries")) {
      index.add({e.at("chunk_id"), e.at("origin_node"), kind, e.at("text")}, e.at("vector").get<std::vector<float>>());
    }
    return index;
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, std::string("malformed index: ") + e.what());
  }
}

void save_index(const PropertyGraphIndex& index, const std::filesystem::path& path) {
  write_json_file(path, to_json(index));
}

PropertyGraphIndex load_index(const std::filesystem::path& path, std::string_view expected_fingerprint) {
  return index_from_json(read_json_file(path), expected_fingerprint);
}

}  // namespace kgfuzz
