#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kgfuzz/common/io.hpp"
#include "kgfuzz/driver/driver_factory.hpp"
#include "kgfuzz/source/source_model.hpp"

namespace kgfuzz {

class LlmGateway;
class PromptTemplates;

inline constexpr int kDefaultRepairIterations = 5;
inline constexpr std::size_t kKbQueryTop = 3;

enum class KbOrigin { Seed, LearnedDriver };
std::string_view to_string(KbOrigin origin) noexcept;

struct KbEntry {
  std::string key;      // API name(s) or error-signature text
  std::string snippet;  // code
  KbOrigin origin = KbOrigin::Seed;
  bool operator==(const KbEntry&) const = default;
};

/// Correct-usage snippets. Entries are only ever appended; version counts the additions.
class UsageKnowledgeBase {
 public:
  /// Appends unless an entry with the same (key, snippet) exists. Returns whether it was added.
  bool add(KbEntry entry);

  const std::vector<KbEntry>& entries() const noexcept { return entries_; }
  std::size_t version() const noexcept { return version_; }
  bool empty() const noexcept { return entries_.empty(); }
  bool operator==(const UsageKnowledgeBase&) const = default;

 private:
  std::vector<KbEntry> entries_;
  std::size_t version_ = 0;
};

/// One Seed entry per distinct (api, snippet) sample.
UsageKnowledgeBase init_kb(const std::vector<std::pair<std::string, std::string>>& seed_samples);

/// Header-derived samples: the include line plus the prototype of every API.
std::vector<std::pair<std::string, std::string>> header_seed_samples(const std::vector<ApiSpec>& apis);

/// Samples from existing drivers in `dir` (*.c): keyed by the known APIs each file calls.
std::vector<std::pair<std::string, std::string>> driver_seed_samples(const std::filesystem::path& dir,
                                                                     const std::vector<ApiSpec>& apis);

json to_json(const UsageKnowledgeBase& kb);
UsageKnowledgeBase kb_from_json(const json& j);
void save_kb(const UsageKnowledgeBase& kb, const std::filesystem::path& path);
UsageKnowledgeBase load_kb(const std::filesystem::path& path);

enum class Severity { Error, Warning, Note };

struct Diagnostic {
  std::string file;
  int line = 0;
  int column = 0;
  Severity severity = Severity::Error;
  std::string message;
  bool operator==(const Diagnostic&) const = default;
};

struct CompileResult {
  bool success = false;
  std::vector<Diagnostic> diagnostics;
  std::string raw_output;
};

/// Parses "file:line[:col]: (fatal error|error|warning|note): message" lines.
std::vector<Diagnostic> parse_diagnostics(const std::string& output);

class CompilerRunner {
 public:
  virtual ~CompilerRunner() = default;
  /// Throws Error(CompilerUnavailable) when the toolchain cannot be run at all.
  virtual CompileResult compile(const std::filesystem::path& source, const std::filesystem::path& output) = 0;
  std::size_t calls() const noexcept { return calls_; }

 protected:
  std::size_t calls_ = 0;
};

struct CommandCompilerConfig {
  /// Placeholders: {src}, {out}, {includes}. Run through the shell with stderr folded into stdout.
  std::string command_template = "clang -g -O1 -fsanitize=fuzzer,address {includes} {src} -o {out}";
  std::vector<std::filesystem::path> include_dirs;
};

class CommandCompilerRunner final : public CompilerRunner {
 public:
  explicit CommandCompilerRunner(CommandCompilerConfig config) : config_(std::move(config)) {}
  CompileResult compile(const std::filesystem::path& source, const std::filesystem::path& output) override;
  std::string command_for(const std::filesystem::path& source, const std::filesystem::path& output) const;

 private:
  CommandCompilerConfig config_;
};

/// Hermetic compiler double.
/// Rule mode: each rule fires when the source lacks `require` or contains `forbid` and
/// contributes its diagnostic line; no fired rule means success.
/// Sequence mode: returns the scripted results in order, then repeats the last one.
class ScriptedCompilerRunner final : public CompilerRunner {
 public:
  struct Rule {
    std::string require;
    std::string forbid;
    std::string diagnostic;  // "file:line:col: error: message"
  };

  static ScriptedCompilerRunner from_rules(std::vector<Rule> rules);
  static ScriptedCompilerRunner from_sequence(std::vector<CompileResult> results);
  /// {"rules":[{"require"|"forbid", "error"}]} or {"sequence":[true, "diag line", ...]}.
  static ScriptedCompilerRunner from_json(const json& j);
  static ScriptedCompilerRunner always_unavailable();

  CompileResult compile(const std::filesystem::path& source, const std::filesystem::path& output) override;

 private:
  std::vector<Rule> rules_;
  std::vector<CompileResult> sequence_;
  bool use_sequence_ = false;
  bool unavailable_ = false;
};

/// Normalized error messages (paths reduced to basenames, line/column numbers removed)
/// followed by the identifiers they quote. Only error-severity entries are used.
/// Errors: NoErrors.
std::string construct_query(const std::vector<Diagnostic>& diagnostics);

/// Best `top` entries by identifier overlap with the query (keys weigh double, a key that
/// appears verbatim in the query gets a bonus). Entries with no overlap are never returned.
std::vector<KbEntry> query_kb(const UsageKnowledgeBase& kb, const std::string& query, std::size_t top = kKbQueryTop);

struct RepairSettings {
  int max_iterations = kDefaultRepairIterations;  // M
  std::filesystem::path work_dir;                 // sources and binaries are written here
};

struct RepairResult {
  FuzzDriver driver;
  UsageKnowledgeBase kb;
  std::size_t compile_calls = 0;
  std::vector<std::string> warnings;
};

std::filesystem::path driver_source_path(const std::filesystem::path& work_dir, const FuzzDriver& driver);
std::filesystem::path driver_binary_path(const std::filesystem::path& work_dir, const FuzzDriver& driver);

/// Compile, and on failure query the KB and ask the code model for a fix, until the driver
/// compiles or M iterations are used. Every iteration counts, including ones whose LLM
/// call failed. Success adds the driver to the KB as a LearnedDriver entry.
/// Errors: CompilerUnavailable.
RepairResult repair_loop(FuzzDriver driver, UsageKnowledgeBase kb, CompilerRunner& compiler, LlmGateway& llm,
                         const PromptTemplates& prompts, const RepairSettings& settings);

}  // namespace kgfuzz
