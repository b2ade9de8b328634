#pragma once

#include <string>
#include <vector>

#include "kgfuzz/common/io.hpp"
#include "kgfuzz/graph/knowledge_graph.hpp"
#include "kgfuzz/index/graph_index.hpp"

namespace kgfuzz {

class LlmGateway;
class PromptTemplates;

inline constexpr std::size_t kDefaultMaxCombinationLen = 6;

struct ApiCombination {
  std::string target_api;
  std::vector<std::string> apis;  // contains target_api, no duplicates
  int generation = 0;             // 0 for the initial query, +1 per mutation
  bool operator==(const ApiCombination&) const = default;
};

json to_json(const ApiCombination& c);
ApiCombination combination_from_json(const json& j);
json combination_manifest(const std::vector<ApiCombination>& combos);

/// Response R being folded over retrieved chunks.
struct RefinementState {
  std::string response_so_far;
  std::size_t consumed_chunks = 0;
  std::string refine_system;
  std::string refine_prompt;  // P_r, with {{response}} and {{chunk}} still open
  std::vector<std::string> warnings;
};

/// One refinement step: R <- LLM(P_r, R, chunk). An LLM failure keeps R, still counts
/// the chunk as consumed and records a warning.
RefinementState refine_response(RefinementState state, const Chunk& chunk, LlmGateway& llm);

/// Lenient parse of "one API name per line" answers: bullets, numbering and backticks are
/// stripped, the leading identifier of each line is kept if it is in `known`, and
/// duplicates are dropped preserving first occurrence.
std::vector<std::string> parse_api_lines(const std::string& answer, const std::vector<std::string>& known);

/// Applies the combination contract to a parsed list: the target is inserted at the front
/// when absent (or when it would fall beyond the length limit) and the list is cut to `max_len`.
ApiCombination finalize_combination(const std::string& target, std::vector<std::string> parsed,
                                    std::size_t max_len, int generation);

struct CombinerSettings {
  RetrievalParams retrieval;
  std::size_t max_combination_len = kDefaultMaxCombinationLen;
};

/// Retrieve -> initialize from the first chunk -> refine with the rest in retrieval order ->
/// final synthesis. Errors: EmptyCombination (after one corrective retry); LlmFailure from
/// the initial or final call.
ApiCombination query_combination(const ApiSpec& target, const CodeKnowledgeGraph& graph,
                                 const PropertyGraphIndex& nl_index, const PropertyGraphIndex& code_index,
                                 const CombinerSettings& settings, Embedder& embedder, LlmGateway& llm,
                                 const PromptTemplates& prompts, std::vector<std::string>* warnings = nullptr);

/// The merged NL + Code retrieval used by query_combination, exposed for inspection.
std::vector<ScoredChunk> retrieve_for_target(const ApiSpec& target, const CodeKnowledgeGraph& graph,
                                             const PropertyGraphIndex& nl_index, const PropertyGraphIndex& code_index,
                                             const RetrievalParams& params, Embedder& embedder);

}  // namespace kgfuzz
