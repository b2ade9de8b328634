#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "kgfuzz/driver/driver_factory.hpp"
#include "kgfuzz/fuzz/coverage.hpp"
#include "kgfuzz/triage/crash_triage.hpp"

namespace kgfuzz {

struct FuzzRunRequest {
  const FuzzDriver* driver = nullptr;
  std::filesystem::path binary;
  std::filesystem::path corpus_dir;
  std::filesystem::path artifact_dir;
  int time_budget_seconds = 0;
};

struct FuzzRunResult {
  int exit_status = 0;
  std::vector<RawCrash> crashes;
  CoverageReport coverage;
};

class FuzzerRunner {
 public:
  virtual ~FuzzerRunner() = default;
  virtual FuzzRunResult run(const FuzzRunRequest& request) = 0;
};

/// Hermetic fuzzer double driven by a JSON script.
///
/// Model mode: {"files": {path: total}, "api_branches": {api: {path: covered}},
///              "crashes": [{"when_api": api, "report": text}]}
///   A driver covers, per file, the sum of its APIs' branches (capped at the total) and
///   crashes with every report whose API it calls.
/// Sequence mode: {"sequence": [{"per_file": {path: {covered, total}}, "crashes": [text]}]}
///   Runs return the steps in order; the last step repeats.
class ScriptedFuzzerRunner final : public FuzzerRunner {
 public:
  explicit ScriptedFuzzerRunner(json script);
  FuzzRunResult run(const FuzzRunRequest& request) override;
  std::size_t runs() const noexcept { return runs_; }

 private:
  json script_;
  std::size_t runs_ = 0;
  std::mutex mu_;
};

struct LibFuzzerConfig {
  /// Placeholders: {binary}, {corpus}, {artifacts}, {seconds}. Output is scanned for
  /// sanitizer reports and "Test unit written to" lines.
  std::string run_template = "{binary} -max_total_time={seconds} -artifact_prefix={artifacts}/ {corpus}";
  /// Optional command printing an `llvm-cov export` JSON document for the run. Same
  /// placeholders. When empty, the run reports no coverage.
  std::string coverage_template;
  std::filesystem::path project_root;
};

class LibFuzzerRunner final : public FuzzerRunner {
 public:
  explicit LibFuzzerRunner(LibFuzzerConfig config) : config_(std::move(config)) {}
  FuzzRunResult run(const FuzzRunRequest& request) override;

 private:
  LibFuzzerConfig config_;
};

/// Splits combined fuzzer output into individual sanitizer reports.
std::vector<std::string> split_sanitizer_reports(const std::string& output);

}  // namespace kgfuzz
