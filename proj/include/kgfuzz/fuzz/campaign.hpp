#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "kgfuzz/common/io.hpp"
#include "kgfuzz/driver/driver_factory.hpp"
#include "kgfuzz/fuzz/fuzzer_runner.hpp"
#include "kgfuzz/fuzz/mutation.hpp"

namespace kgfuzz {

class LlmGateway;
class PromptTemplates;

inline constexpr int kReportSchemaVersion = 1;

struct CampaignSettings {
  std::filesystem::path out_dir;    // workspace: corpus/, cov/, crashes/, drivers/, report.json
  std::filesystem::path build_dir;  // driver binaries
  int time_budget_seconds = 60;
  int mutation_budget = kDefaultMutationBudget;
  std::size_t max_combination_len = kDefaultMaxCombinationLen;
  std::size_t max_seeds = 16;
  std::size_t workers = 1;
};

struct CampaignContext {
  const CodeKnowledgeGraph& graph;
  LlmGateway& llm;
  const PromptTemplates& prompts;
  FuzzerRunner& fuzzer;
  /// Generates and repairs a driver for a mutated combination. The returned driver is
  /// fuzzed only if its status is Compiled.
  std::function<FuzzDriver(const ApiCombination&)> build_driver;
};

/// Phase 1 (parallel over drivers): seed bank and an initial fuzz run per compiled driver.
/// Phase 2 (sequential, by driver id): coverage-guided mutation against the campaign
/// coverage. Per-driver failures are recorded and the campaign continues; only
/// CompilerUnavailable aborts. Writes report.json and returns it.
json run_campaign(std::vector<FuzzDriver> drivers, CampaignContext& ctx, const CampaignSettings& settings,
                  std::vector<std::string>* warnings = nullptr);

/// All crash files under `<out_dir>/crashes`, ordered by driver id then crash number.
std::vector<RawCrash> load_raw_crashes(const std::filesystem::path& out_dir);

}  // namespace kgfuzz
