#include "kgfuzz/combiner/api_combiner.hpp"

#include <algorithm>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/text.hpp"
#include "kgfuzz/llm/gateway.hpp"
#include "kgfuzz/llm/prompts.hpp"

namespace kgfuzz {

json to_json(const ApiCombination& c) {
  return {{"target_api", c.target_api}, {"apis", c.apis}, {"generation", c.generation}};
}

ApiCombination combination_from_json(const json& j) {
  return {j.at("target_api"), j.at("apis").get<std::vector<std::string>>(), j.at("generation")};
}

json combination_manifest(const std::vector<ApiCombination>& combos) {
  json out = json::array();
  for (const auto& c : combos) out.push_back(to_json(c));
  return out;
}

RefinementState refine_response(RefinementState state, const Chunk& chunk, LlmGateway& llm) {
  const std::string user = text::render(state.refine_prompt, {{"response", state.response_so_far}, {"chunk", chunk.text}});
  auto req = ChatRequest::make(LlmRole::Chat, {{"system", state.refine_system}, {"user", user}});
  try {
    state.response_so_far = llm.complete(req);
  } catch (const Error& e) {
    if (!is_llm_error(e)) throw;
    state.warnings.push_back("refinement skipped chunk " + chunk.chunk_id + ": " + e.what());
  }
  ++state.consumed_chunks;
  return state;
}

std::vector<std::string> parse_api_lines(const std::string& answer, const std::vector<std::string>& known) {
  std::vector<std::string> out;
  for (const auto& raw : text::split_lines(answer)) {
    std::string_view line = text::trim(raw);
    // Strip list markers and inline-code quoting.
    for (;;) {
      const std::size_t before = line.size();
      while (!line.empty() && (line.front() == '-' || line.front() == '*' || line.front() == '`' ||
                               line.front() == '>' || line.front() == ' ' || line.front() == '\t')) {
        line.remove_prefix(1);
      }
      std::size_t digits = 0;
      while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
      if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) {
        line.remove_prefix(digits + 1);
      }
      if (line.size() == before) break;
    }
    std::size_t n = 0;
    if (!line.empty() && text::is_ident_start(line.front())) {
      while (n < line.size() && text::is_ident_char(line[n])) ++n;
    }
    if (n == 0) continue;
    std::string name(line.substr(0, n));
    if (std::find(known.begin(), known.end(), name) == known.end()) continue;
    if (std::find(out.begin(), out.end(), name) != out.end()) continue;
    out.push_back(std::move(name));
  }
  return out;
}

ApiCombination finalize_combination(const std::string& target, std::vector<std::string> parsed, std::size_t max_len,
                                    int generation) {
  max_len = std::max<std::size_t>(max_len, 1);
  auto it = std::find(parsed.begin(), parsed.end(), target);
  if (it == parsed.end()) {
    parsed.insert(parsed.begin(), target);
  } else if (static_cast<std::size_t>(it - parsed.begin()) >= max_len) {
    parsed.erase(it);
    parsed.insert(parsed.begin(), target);
  }
  if (parsed.size() > max_len) parsed.resize(max_len);
  return {target, std::move(parsed), generation};
}

std::vector<ScoredChunk> retrieve_for_target(const ApiSpec& target, const CodeKnowledgeGraph& graph,
                                             const PropertyGraphIndex& nl_index, const PropertyGraphIndex& code_index,
                                             const RetrievalParams& params, Embedder& embedder) {
  const FunctionNode* node = graph.api_node(target.name);
  const std::string signature = node ? node->signature : target.signature;
  const std::string nl_query = node && !node->summary.empty() ? node->summary + "\n" + signature : signature;
  const std::string code_query = node ? node->source_code : signature;

  auto merged = retrieve_chunks(nl_query, nl_index, params, embedder);
  auto code = retrieve_chunks(code_query, code_index, params, embedder);
  merged.insert(merged.end(), code.begin(), code.end());
  std::stable_sort(merged.begin(), merged.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk.chunk_id < b.chunk.chunk_id;
  });
  if (merged.size() > params.top_k) merged.resize(params.top_k);
  return merged;
}

ApiCombination query_combination(const ApiSpec& target, const CodeKnowledgeGraph& graph,
                                 const PropertyGraphIndex& nl_index, const PropertyGraphIndex& code_index,
                                 const CombinerSettings& settings, Embedder& embedder, LlmGateway& llm,
                                 const PromptTemplates& prompts, std::vector<std::string>* warnings) {
  std::vector<std::string> known;
  for (const auto& a : graph.apis) known.push_back(a.name);
  if (known.size() <= 1) return finalize_combination(target.name, {}, settings.max_combination_len, 0);

  const FunctionNode* node = graph.api_node(target.name);
  const std::string known_list = text::join(known, ", ");
  const std::string query = prompts.render(
      "combine.query", {{"target", target.name},
                        {"signature", node ? node->signature : target.signature},
                        {"summary", node && !node->summary.empty() ? node->summary : "(none)"}});

  const auto chunks = retrieve_for_target(target, graph, nl_index, code_index, settings.retrieval, embedder);

  RefinementState state;
  state.refine_system = prompts.get("combine_refine.system");
  state.refine_prompt = prompts.render("combine_refine.user", {{"query", query}, {"known_apis", known_list}});
  {
    const std::string first = chunks.empty() ? "(no context retrieved)" : chunks.front().chunk.text;
    auto req = ChatRequest::make(
        LlmRole::Chat,
        {{"system", prompts.get("combine_initial.system")},
         {"user", prompts.render("combine_initial.user", {{"query", query}, {"known_apis", known_list}, {"chunk", first}})}});
    state.response_so_far = llm.complete(req);
    state.consumed_chunks = chunks.empty() ? 0 : 1;
  }
  for (std::size_t i = 1; i < chunks.size(); ++i) state = refine_response(std::move(state), chunks[i].chunk, llm);
  if (warnings) warnings->insert(warnings->end(), state.warnings.begin(), state.warnings.end());

  std::vector<ChatMessage> messages = {
      {"system", prompts.get("combine_final.system")},
      {"user", prompts.render("combine_final.user", {{"query", query},
                                                     {"known_apis", known_list},
                                                     {"response", state.response_so_far},
                                                     {"target", target.name},
                                                     {"max_len", std::to_string(settings.max_combination_len)}})}};
  std::string answer = llm.complete(ChatRequest::make(LlmRole::Chat, messages));
  auto parsed = parse_api_lines(answer, known);
  if (parsed.empty()) {
    messages.push_back({"assistant", answer});
    messages.push_back({"user", prompts.render("combine_retry.user", {{"known_apis", known_list}})});
    answer = llm.complete(ChatRequest::make(LlmRole::Chat, messages));
    parsed = parse_api_lines(answer, known);
    if (parsed.empty()) throw Error(Errc::EmptyCombination, target.name);
  }
  return finalize_combination(target.name, std::move(parsed), settings.max_combination_len, 0);
}

}  // namespace kgfuzz
