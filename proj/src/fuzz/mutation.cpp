#include "kgfuzz/fuzz/mutation.hpp"

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/text.hpp"
#include "kgfuzz/llm/gateway.hpp"
#include "kgfuzz/llm/prompts.hpp"

namespace kgfuzz {

std::string construct_mutation_query(const std::vector<std::string>& low_apis, const CodeKnowledgeGraph& graph) {
  std::string q;
  for (std::size_t i = 0; i < low_apis.size(); ++i) {
    const FunctionNode* n = graph.api_node(low_apis[i]);
    q += std::to_string(i + 1) + ". " + low_apis[i];
    if (n) q += " (" + n->file_path + ")";
    q += "\n";
  }
  return q;
}

ApiCombination mutate_combination(MutationState& state, const std::vector<std::string>& low_apis,
                                  const CoverageReport& baseline, LlmGateway& llm, const PromptTemplates& prompts,
                                  const CodeKnowledgeGraph& graph, const CandidateEvaluator& evaluate,
                                  std::size_t max_len, std::vector<std::string>* warnings) {
  if (low_apis.empty()) return state.combination;
  auto warn = [&](std::string w) {
    if (warnings) warnings->push_back(std::move(w));
  };

  std::vector<std::string> known;
  for (const auto& a : graph.apis) known.push_back(a.name);
  const std::string query = construct_mutation_query(low_apis, graph);
  const ApiCombination& A = state.combination;
  ApiCombination last = A;

  while (state.iterations < state.budget && !state.found_new_path) {
    ++state.iterations;
    std::vector<std::string> tried;
    for (const auto& t : state.tried) tried.push_back("[" + text::join(t.apis, ", ") + "]");
    auto req = ChatRequest::make(
        LlmRole::Chat,
        {{"system", prompts.get("mutate.system")},
         {"user", prompts.render("mutate.user", {{"current", text::join(A.apis, ", ")},
                                                 {"query", query},
                                                 {"tried", tried.empty() ? "(none)" : text::join(tried, " ")},
                                                 {"known_apis", text::join(known, ", ")},
                                                 {"target", A.target_api},
                                                 {"max_len", std::to_string(max_len)}})}});
    std::string answer;
    try {
      answer = llm.complete(req);
    } catch (const Error& e) {
      if (!is_llm_error(e)) throw;
      warn("mutation " + std::to_string(state.iterations) + " of " + A.target_api + ": " + e.what());
      continue;
    }
    auto parsed = parse_api_lines(answer, known);
    if (parsed.empty()) {
      warn("mutation " + std::to_string(state.iterations) + " of " + A.target_api + ": no known API in answer");
      continue;
    }
    ApiCombination candidate = finalize_combination(A.target_api, std::move(parsed), max_len, A.generation + state.iterations);
    last = candidate;
    state.tried.push_back(candidate);

    std::optional<CoverageReport> cov;
    try {
      cov = evaluate(candidate);
    } catch (const Error& e) {
      if (e.code() == Errc::CompilerUnavailable) throw;
      warn("mutation " + std::to_string(state.iterations) + " of " + A.target_api + " failed downstream: " + e.what());
    }
    if (!cov) continue;
    const CoverageReport after = merge_max(baseline, project_onto(*cov, baseline));
    state.found_new_path = detect_new_path(baseline, after);
  }
  return last;
}

}  // namespace kgfuzz
