#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kgfuzz/app/config.hpp"

namespace kgfuzz {

class LlmGateway;
class PromptTemplates;
class Embedder;

enum class Stage { BuildGraph, Index, Gen, Repair, Fuzz, Triage, Report };

std::string_view to_string(Stage s) noexcept;
std::optional<Stage> stage_from_string(std::string_view s) noexcept;
const std::vector<Stage>& all_stages();

/// Fixed workspace file names under the output directory.
namespace artifacts {
inline constexpr const char* kGraph = "graph.json";
inline constexpr const char* kIndexNl = "index_nl.json";
inline constexpr const char* kIndexCode = "index_code.json";
inline constexpr const char* kCombinations = "combinations.json";
inline constexpr const char* kKb = "kb.json";
inline constexpr const char* kDrivers = "drivers";
inline constexpr const char* kBuild = "build";
inline constexpr const char* kCorpus = "corpus";
inline constexpr const char* kCov = "cov";
inline constexpr const char* kCrashes = "crashes";
inline constexpr const char* kTriage = "triage.jsonl";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kTranscript = "transcript.json";
inline constexpr const char* kLock = ".lock";
}  // namespace artifacts

/// Exclusive claim on a workspace, held for the object's lifetime. A lock left behind by a
/// process that no longer exists is taken over. Errors: IoError when another live
/// process holds it.
class WorkspaceLock {
 public:
  explicit WorkspaceLock(const std::filesystem::path& dir);
  ~WorkspaceLock();
  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;

 private:
  std::filesystem::path path_;
};

struct PipelineOptions {
  bool force = false;                  // rebuild artifacts that already exist
  std::optional<std::int64_t> workers;  // overrides the config value
};

/// Runs pipeline stages against one workspace. Each stage reads its inputs from the
/// workspace and writes its outputs there, so stages compose.
class Pipeline {
 public:
  Pipeline(CampaignConfig config, PipelineOptions options, std::ostream& log);
  ~Pipeline();

  /// Errors: MissingArtifact when an input of the stage is absent; stage-specific errors.
  void run(Stage stage);
  void run_from(Stage first);

  /// Planned LLM calls of a stage, one line per call group. Nothing is written.
  std::vector<std::string> plan(Stage stage);

  const CampaignConfig& config() const noexcept { return config_; }
  std::filesystem::path out(const std::string& name) const { return config_.output_dir / name; }

 private:
  void build_graph_stage();
  void index_stage();
  void gen_stage();
  void repair_stage();
  void fuzz_stage();
  void triage_stage();
  void report_stage();

  LlmGateway& gateway();
  Embedder& embedder();
  void save_transcript();
  void require(const std::string& artifact, Stage producer) const;
  bool fresh(const std::string& artifact) const;
  std::size_t workers() const;

  CampaignConfig config_;
  PipelineOptions options_;
  std::ostream& log_;
  std::unique_ptr<PromptTemplates> prompts_;
  std::unique_ptr<LlmGateway> gateway_;
  std::unique_ptr<Embedder> embedder_;
};

}  // namespace kgfuzz
