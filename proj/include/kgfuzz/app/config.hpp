#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace kgfuzz {

/// Flat view of a TOML-like file: `key = value` lines grouped under `[section]` headers,
/// addressed as "section.key". Values are strings ("..." with \" \\ \n \t escapes), integers,
/// reals, booleans or arrays of strings. `#` starts a comment outside strings.
class ConfigFile {
 public:
  using Value = std::variant<std::string, std::int64_t, double, bool, std::vector<std::string>>;

  /// Errors: ConfigError naming the line.
  static ConfigFile parse(std::string_view text);
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, Value>& values() const noexcept { return values_; }

  /// Typed getters; ConfigError on a type mismatch. Integers are accepted where reals are expected.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;

 private:
  std::map<std::string, Value> values_;
};

struct ProviderSettings {
  std::string provider = "synthetic";  // mock | synthetic | http
  std::string endpoint;
  std::string model;
  std::string api_key_env;
};

struct CampaignConfig {
  std::filesystem::path config_dir;  // relative paths below resolve against this
  std::filesystem::path project_root;
  std::vector<std::string> include_globs{"**/*.c", "**/*.h"};
  std::filesystem::path api_list;
  std::filesystem::path output_dir;

  double similarity_threshold = 0.0;
  std::int64_t top_k = 8;
  std::int64_t max_combination_len = 6;
  std::int64_t repair_max_iterations = 5;
  std::int64_t mutation_max_iterations = 3;
  std::int64_t fuzz_time_budget_seconds = 60;
  std::int64_t max_seeds = 16;
  std::int64_t workers = 1;
  std::int64_t rng_seed = 0;
  bool summarize = true;

  ProviderSettings coder;
  ProviderSettings chat;
  std::filesystem::path transcript;  // replay source for the mock provider
  std::int64_t max_retries = 3;
  std::optional<std::int64_t> call_cap;
  std::int64_t max_concurrent_llm = 4;
  std::int64_t backoff_base_ms = 200;
  std::int64_t backoff_max_ms = 5000;

  std::string embedder = "hash";  // hash | http
  std::int64_t embedder_dim = 64;
  std::string embedder_endpoint;
  std::string embedder_model;
  std::string embedder_api_key_env;

  std::string compiler = "command";  // command | scripted
  std::string compiler_command = "clang -g -O1 -fsanitize=fuzzer,address {includes} {src} -o {out}";
  std::vector<std::filesystem::path> compiler_include_dirs;
  std::filesystem::path compiler_script;

  std::string fuzzer = "libfuzzer";  // libfuzzer | scripted
  std::string fuzzer_run = "{binary} -max_total_time={seconds} -artifact_prefix={artifacts}/ {corpus}";
  std::string fuzzer_coverage;
  std::filesystem::path fuzzer_script;

  double cwe_threshold = 0.5;
  std::filesystem::path cwe_kb;
  std::filesystem::path prompts_dir;
  std::filesystem::path kb_seed_dir;  // optional existing drivers used as KB seeds
};

/// Reads and validates a campaign config. Errors: ConfigError(field).
CampaignConfig load_campaign_config(const std::filesystem::path& path);
CampaignConfig campaign_config_from(const ConfigFile& file, const std::filesystem::path& config_dir);

}  // namespace kgfuzz
