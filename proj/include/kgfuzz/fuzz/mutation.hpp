#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kgfuzz/combiner/api_combiner.hpp"
#include "kgfuzz/fuzz/coverage.hpp"

namespace kgfuzz {

class LlmGateway;
class PromptTemplates;

inline constexpr int kDefaultMutationBudget = 3;

struct MutationState {
  ApiCombination combination;  // A
  int iterations = 0;          // i
  int budget = kDefaultMutationBudget;
  bool found_new_path = false;
  std::vector<ApiCombination> tried;
};

/// Builds, compiles and runs a driver for a candidate combination and returns the run's
/// coverage, or nullopt when the candidate could not be built or run.
using CandidateEvaluator = std::function<std::optional<CoverageReport>(const ApiCombination&)>;

/// Numbered low-coverage API list with each API's file, in priority order.
std::string construct_mutation_query(const std::vector<std::string>& low_apis, const CodeKnowledgeGraph& graph);

/// Coverage-guided mutation. While i < budget and no new path: ask the chat model for a
/// restructured combination (validated like the combiner output, generation A.generation+i),
/// evaluate it and compare against `baseline`. Failed iterations count. Returns the last
/// candidate, or A unchanged when `low_apis` is empty (no LLM call).
ApiCombination mutate_combination(MutationState& state, const std::vector<std::string>& low_apis,
                                  const CoverageReport& baseline, LlmGateway& llm, const PromptTemplates& prompts,
                                  const CodeKnowledgeGraph& graph, const CandidateEvaluator& evaluate,
                                  std::size_t max_len = kDefaultMaxCombinationLen,
                                  std::vector<std::string>* warnings = nullptr);

}  // namespace kgfuzz
