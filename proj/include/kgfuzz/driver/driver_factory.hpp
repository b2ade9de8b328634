#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kgfuzz/combiner/api_combiner.hpp"
#include "kgfuzz/common/io.hpp"
#include "kgfuzz/graph/knowledge_graph.hpp"
#include "kgfuzz/llm/chat.hpp"

namespace kgfuzz {

class LlmGateway;
class PromptTemplates;

inline constexpr std::string_view kFuzzEntryPoint = "LLVMFuzzerTestOneInput";
inline constexpr std::size_t kMemoryTurnCap = 8;

/// Per-driver conversation history. Only user/assistant turns are kept; the oldest turns
/// are dropped once the cap is exceeded.
class DriverMemory {
 public:
  explicit DriverMemory(std::size_t cap = kMemoryTurnCap) : cap_(cap) {}
  void push(ChatMessage turn);
  const std::vector<ChatMessage>& turns() const noexcept { return turns_; }
  std::size_t cap() const noexcept { return cap_; }
  bool operator==(const DriverMemory&) const = default;

 private:
  std::size_t cap_;
  std::vector<ChatMessage> turns_;
};

struct ApiContextEntry {
  std::string name;
  std::string signature;
  std::string source_code;
  std::string header;
  std::string summary;
  bool operator==(const ApiContextEntry&) const = default;
};

struct PromptBundle {
  ApiCombination combination;
  std::string system;
  std::string task_definition;
  std::vector<ApiContextEntry> api_context;  // combination order, one per API
  std::string error_handling_rules;
  DriverMemory memory;
  bool operator==(const PromptBundle&) const = default;
};

/// Pure: identical inputs give an identical bundle. Errors: MissingApiNode(name).
PromptBundle build_prompt(const ApiCombination& combination, const CodeKnowledgeGraph& graph,
                          const PromptTemplates& prompts);

/// System message, the three bundle sections as one user turn, then the memory turns.
std::vector<ChatMessage> render_messages(const PromptBundle& bundle, const PromptTemplates& prompts);

enum class DriverStatus { Generated, Compiled, RepairFailed, GenerationFailed };
std::string_view to_string(DriverStatus status) noexcept;
DriverStatus driver_status_from_string(std::string_view s);

struct FuzzDriver {
  std::string driver_id;
  ApiCombination combination;
  std::string source;
  DriverStatus status = DriverStatus::Generated;
  int repair_iterations_used = 0;
  std::string transcript_digest;  // digest of the last LLM request made for this driver
  DriverMemory memory;
  std::vector<std::string> problems;  // structural check findings of the last attempt
};

std::string make_driver_id(const ApiCombination& combination);

struct StructuralCheck {
  bool ok = false;
  std::vector<std::string> problems;
};

/// Lexical check with comments and string/char literals blanked out: the entry point
/// identifier is present and every API name occurs followed by "(".
StructuralCheck structural_check(const std::string& source, const std::vector<std::string>& apis);

/// Source with comments and literal contents replaced by spaces (newlines kept).
std::string strip_comments_and_strings(const std::string& source);

/// Generates once and, if the check fails, retries once with a corrective turn through the
/// memory. A failed check leaves status GenerationFailed. LlmFailure propagates.
FuzzDriver try_generate_driver(PromptBundle bundle, LlmGateway& llm, const PromptTemplates& prompts);

/// As try_generate_driver, but throws Error(StructuralCheckFailed) for a failed candidate.
FuzzDriver generate_driver(PromptBundle bundle, LlmGateway& llm, const PromptTemplates& prompts);

json driver_meta_json(const FuzzDriver& driver);
FuzzDriver driver_from_meta(const json& meta, std::string source);

/// Writes `<dir>/<driver_id>.c` and `<dir>/<driver_id>.meta.json`.
void save_driver(const FuzzDriver& driver, const std::filesystem::path& dir);
FuzzDriver load_driver(const std::filesystem::path& dir, const std::string& driver_id);
std::vector<FuzzDriver> load_drivers(const std::filesystem::path& dir);

}  // namespace kgfuzz
