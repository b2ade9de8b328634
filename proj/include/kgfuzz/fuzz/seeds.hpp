#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgfuzz/driver/driver_factory.hpp"
#include "kgfuzz/fuzz/dataflow.hpp"

namespace kgfuzz {

class LlmGateway;
class PromptTemplates;

enum class SeedProvenance { LlmGenerated, Fallback, FuzzerCorpus };
std::string_view to_string(SeedProvenance p) noexcept;

struct SeedInput {
  std::string seed_id;  // 16 hex chars of sha256(bytes)
  std::string bytes;
  SeedProvenance provenance = SeedProvenance::LlmGenerated;
  bool operator==(const SeedInput&) const = default;
};

SeedInput make_seed(std::string bytes, SeedProvenance provenance);

/// Parses `hex:<hexdigits>` or `str:"<C-escaped>"`. Returns nullopt for anything else.
std::optional<std::string> parse_seed_literal(std::string_view line);

/// Empty input, a single zero byte and 256 bytes counting 0..255.
std::vector<SeedInput> fallback_seeds();

/// Asks the chat model for seeds using the driver, its data-flow facts and the API
/// signatures, then appends the fallback seeds. Duplicate payloads are dropped.
/// Malformed lines are skipped with a warning; an LLM failure yields the fallbacks only.
std::vector<SeedInput> init_input_bank(const FuzzDriver& driver, const DataFlowFacts& facts, LlmGateway& llm,
                                       const PromptTemplates& prompts, std::size_t max_seeds = 16,
                                       std::vector<std::string>* warnings = nullptr);

/// Writes each seed to `<dir>/<seed_id>`.
void write_corpus(const std::vector<SeedInput>& seeds, const std::filesystem::path& dir);
/// All regular files in `dir`, sorted by name.
std::vector<SeedInput> read_corpus(const std::filesystem::path& dir);

}  // namespace kgfuzz
