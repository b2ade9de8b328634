#pragma once

#include <string>
#include <vector>

#include "kgfuzz/source/source_model.hpp"

namespace kgfuzz {

class LlmGateway;
class PromptTemplates;

class Summarizer {
 public:
  virtual ~Summarizer() = default;
  virtual std::string summarize_function(const SourceFunction& fn) = 0;
  virtual std::string summarize_file(const std::string& path, const std::vector<const SourceFunction*>& fns) = 0;
};

/// Leaves every summary empty.
class NullSummarizer final : public Summarizer {
 public:
  std::string summarize_function(const SourceFunction&) override { return {}; }
  std::string summarize_file(const std::string&, const std::vector<const SourceFunction*>&) override { return {}; }
};

/// Chat-role summaries: purpose + usage in at most three sentences per function,
/// module overview per file.
class LlmSummarizer final : public Summarizer {
 public:
  LlmSummarizer(LlmGateway& gateway, const PromptTemplates& prompts) : gateway_(gateway), prompts_(prompts) {}

  std::string summarize_function(const SourceFunction& fn) override;
  std::string summarize_file(const std::string& path, const std::vector<const SourceFunction*>& fns) override;

 private:
  LlmGateway& gateway_;
  const PromptTemplates& prompts_;
};

}  // namespace kgfuzz
