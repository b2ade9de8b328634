#include "kgfuzz/graph/summarizer.hpp"

#include "kgfuzz/common/text.hpp"
#include "kgfuzz/llm/gateway.hpp"
#include "kgfuzz/llm/prompts.hpp"

namespace kgfuzz {

std::string LlmSummarizer::summarize_function(const SourceFunction& fn) {
  auto req = ChatRequest::make(
      LlmRole::Chat,
      {{"system", prompts_.get("summarize_function.system")},
       {"user", prompts_.render("summarize_function.user", {{"name", fn.name},
                                                             {"signature", fn.signature},
                                                             {"file", fn.file_path},
                                                             {"source", fn.source_text}})}});
  return std::string(text::trim(gateway_.complete(req)));
}

std::string LlmSummarizer::summarize_file(const std::string& path, const std::vector<const SourceFunction*>& fns) {
  std::string listing;
  for (const auto* fn : fns) listing += "- " + fn->signature + "\n";
  if (listing.empty()) listing = "(no function definitions)\n";
  auto req = ChatRequest::make(LlmRole::Chat, {{"system", prompts_.get("summarize_file.system")},
                                               {"user", prompts_.render("summarize_file.user",
                                                                        {{"path", path}, {"functions", listing}})}});
  return std::string(text::trim(gateway_.complete(req)));
}

}  // namespace kgfuzz
