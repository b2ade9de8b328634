#include "kgfuzz/app/config.hpp"

#include <algorithm>
#include <charconv>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/io.hpp"
#include "kgfuzz/common/text.hpp"

namespace kgfuzz {
namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw Error(Errc::ConfigError, "line " + std::to_string(line) + ": " + what);
}

// Parses a quoted string starting at s[i] == '"'; advances i past the closing quote.
std::string parse_string(std::string_view s, std::size_t& i, int line) {
  std::string out;
  for (++i; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') {
      ++i;
      return out;
    }
    if (c == '\\') {
      if (++i >= s.size()) break;
      switch (s[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(line, "unknown escape");
      }
    } else {
      out += c;
    }
  }
  fail(line, "unterminated string");
}

std::string_view strip_comment(std::string_view s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (in_str && s[i] == '\\') {
      ++i;
    } else if (s[i] == '"') {
      in_str = !in_str;
    } else if (s[i] == '#' && !in_str) {
      return s.substr(0, i);
    }
  }
  return s;
}

ConfigFile::Value parse_value(std::string_view v, int line) {
  v = text::trim(v);
  if (v.empty()) fail(line, "missing value");
  if (v.front() == '"') {
    std::size_t i = 0;
    std::string s = parse_string(v, i, line);
    if (!text::trim(v.substr(i)).empty()) fail(line, "trailing characters after string");
    return s;
  }
  if (v.front() == '[') {
    std::vector<std::string> items;
    std::size_t i = 1;
    for (;;) {
      while (i < v.size() && (v[i] == ' ' || v[i] == '\t')) ++i;
      if (i >= v.size()) fail(line, "unterminated array");
      if (v[i] == ']') {
        ++i;
        break;
      }
      if (v[i] != '"') fail(line, "arrays may only hold strings");
      items.push_back(parse_string(v, i, line));
      while (i < v.size() && (v[i] == ' ' || v[i] == '\t')) ++i;
      if (i < v.size() && v[i] == ',') ++i;
    }
    if (!text::trim(v.substr(i)).empty()) fail(line, "trailing characters after array");
    return items;
  }
  if (v == "true") return true;
  if (v == "false") return false;
  std::int64_t iv = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), iv);
  if (ec == std::errc() && p == v.data() + v.size()) return iv;
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  fail(line, "cannot parse value '" + std::string(v) + "'");
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text_in) {
  ConfigFile cfg;
  std::string section;
  int line_no = 0;
  for (const auto& raw : text::split_lines(text_in)) {
    ++line_no;
    auto line = text::trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      if (section.empty()) fail(line_no, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    const std::string key(text::trim(line.substr(0, eq)));
    if (key.empty()) fail(line_no, "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.values_.count(full)) fail(line_no, "duplicate key " + full);
    cfg.values_[full] = parse_value(line.substr(eq + 1), line_no);
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::string content;
  try {
    content = read_text_file(path);
  } catch (const Error&) {
    throw Error(Errc::ConfigError, "cannot read config " + path.string());
  }
  return parse(content);
}

namespace {

template <typename T>
const T* typed(const std::map<std::string, ConfigFile::Value>& values, const std::string& key, const char* want) {
  auto it = values.find(key);
  if (it == values.end()) return nullptr;
  if (auto* p = std::get_if<T>(&it->second)) return p;
  throw Error(Errc::ConfigError, key + ": expected " + want);
}

}  // namespace

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  auto* p = typed<std::string>(values_, key, "a string");
  return p ? *p : fallback;
}

std::int64_t ConfigFile::get_int(const std::string& key, std::int64_t fallback) const {
  auto* p = typed<std::int64_t>(values_, key, "an integer");
  return p ? *p : fallback;
}

double ConfigFile::get_real(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&it->second)) return *d;
  throw Error(Errc::ConfigError, key + ": expected a number");
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  auto* p = typed<bool>(values_, key, "true or false");
  return p ? *p : fallback;
}

std::vector<std::string> ConfigFile::get_list(const std::string& key, const std::vector<std::string>& fallback) const {
  auto* p = typed<std::vector<std::string>>(values_, key, "an array of strings");
  return p ? *p : fallback;
}

namespace {

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> kKeys = {
      "project_root", "include_globs", "api_list", "output_dir", "max_combination_len", "workers", "rng_seed",
      "prompts_dir", "cwe_kb", "kb_seed_dir", "summarize",
      "retrieval.similarity_threshold", "retrieval.top_k",
      "repair.max_iterations", "mutation.max_iterations",
      "fuzz.time_budget_seconds", "fuzz.max_seeds",
      "llm.transcript", "llm.max_retries", "llm.call_cap", "llm.max_concurrent", "llm.backoff_base_ms",
      "llm.backoff_max_ms",
      "llm.coder.provider", "llm.coder.endpoint", "llm.coder.model", "llm.coder.api_key_env",
      "llm.chat.provider", "llm.chat.endpoint", "llm.chat.model", "llm.chat.api_key_env",
      "embedder.kind", "embedder.dim", "embedder.endpoint", "embedder.model", "embedder.api_key_env",
      "compiler.kind", "compiler.command", "compiler.include_dirs", "compiler.script",
      "fuzzer.kind", "fuzzer.run", "fuzzer.coverage", "fuzzer.script",
      "triage.cwe_threshold"};
  return kKeys;
}

void require_non_negative(std::int64_t v, const char* field) {
  if (v < 0) throw Error(Errc::ConfigError, std::string(field) + " must be >= 0");
}

void require_one_of(const std::string& v, std::initializer_list<const char*> allowed, const char* field) {
  for (const char* a : allowed) {
    if (v == a) return;
  }
  throw Error(Errc::ConfigError, std::string(field) + ": unsupported value '" + v + "'");
}

}  // namespace

CampaignConfig campaign_config_from(const ConfigFile& f, const std::filesystem::path& config_dir) {
  for (const auto& [key, value] : f.values()) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw Error(Errc::ConfigError, "unknown key " + key);
  }
  CampaignConfig c;
  c.config_dir = config_dir;
  auto path = [&](const std::string& key, const std::string& fallback = "") -> std::filesystem::path {
    const std::string v = f.get_string(key, fallback);
    if (v.empty()) return {};
    std::filesystem::path p(v);
    return p.is_absolute() ? p : (config_dir / p).lexically_normal();
  };

  if (!f.has("project_root")) throw Error(Errc::ConfigError, "project_root is required");
  c.project_root = path("project_root");
  c.include_globs = f.get_list("include_globs", c.include_globs);
  c.api_list = path("api_list");
  if (c.api_list.empty()) throw Error(Errc::ConfigError, "api_list is required");
  c.output_dir = path("output_dir", "out");
  c.max_combination_len = f.get_int("max_combination_len", c.max_combination_len);
  c.workers = f.get_int("workers", c.workers);
  c.rng_seed = f.get_int("rng_seed", c.rng_seed);
  c.summarize = f.get_bool("summarize", c.summarize);
  c.prompts_dir = path("prompts_dir");
  c.cwe_kb = path("cwe_kb");
  if (c.cwe_kb.empty()) c.cwe_kb = std::filesystem::path(KGFUZZ_DATA_DIR) / "cwe_starter.json";
  c.kb_seed_dir = path("kb_seed_dir");

  c.similarity_threshold = f.get_real("retrieval.similarity_threshold", c.similarity_threshold);
  c.top_k = f.get_int("retrieval.top_k", c.top_k);
  c.repair_max_iterations = f.get_int("repair.max_iterations", c.repair_max_iterations);
  c.mutation_max_iterations = f.get_int("mutation.max_iterations", c.mutation_max_iterations);
  c.fuzz_time_budget_seconds = f.get_int("fuzz.time_budget_seconds", c.fuzz_time_budget_seconds);
  c.max_seeds = f.get_int("fuzz.max_seeds", c.max_seeds);

  auto provider = [&](const std::string& role) {
    ProviderSettings p;
    p.provider = f.get_string("llm." + role + ".provider", p.provider);
    p.endpoint = f.get_string("llm." + role + ".endpoint", "");
    p.model = f.get_string("llm." + role + ".model", "");
    p.api_key_env = f.get_string("llm." + role + ".api_key_env", "");
    require_one_of(p.provider, {"mock", "synthetic", "http"}, ("llm." + role + ".provider").c_str());
    if (p.provider == "http" && (p.endpoint.empty() || p.model.empty())) {
      throw Error(Errc::ConfigError, "llm." + role + ": http provider needs endpoint and model");
    }
    return p;
  };
  c.coder = provider("coder");
  c.chat = f.has("llm.chat.provider") ? provider("chat") : c.coder;
  c.transcript = path("llm.transcript");
  if ((c.coder.provider == "mock" || c.chat.provider == "mock") && c.transcript.empty()) {
    throw Error(Errc::ConfigError, "llm.transcript is required for the mock provider");
  }
  c.max_retries = f.get_int("llm.max_retries", c.max_retries);
  if (f.has("llm.call_cap")) c.call_cap = f.get_int("llm.call_cap", 0);
  c.max_concurrent_llm = f.get_int("llm.max_concurrent", c.max_concurrent_llm);
  c.backoff_base_ms = f.get_int("llm.backoff_base_ms", c.backoff_base_ms);
  c.backoff_max_ms = f.get_int("llm.backoff_max_ms", c.backoff_max_ms);

  c.embedder = f.get_string("embedder.kind", c.embedder);
  require_one_of(c.embedder, {"hash", "http"}, "embedder.kind");
  c.embedder_dim = f.get_int("embedder.dim", c.embedder_dim);
  c.embedder_endpoint = f.get_string("embedder.endpoint", "");
  c.embedder_model = f.get_string("embedder.model", "");
  c.embedder_api_key_env = f.get_string("embedder.api_key_env", "");

  c.compiler = f.get_string("compiler.kind", c.compiler);
  require_one_of(c.compiler, {"command", "scripted"}, "compiler.kind");
  c.compiler_command = f.get_string("compiler.command", c.compiler_command);
  for (const auto& d : f.get_list("compiler.include_dirs", {})) {
    std::filesystem::path p(d);
    c.compiler_include_dirs.push_back(p.is_absolute() ? p : (config_dir / p).lexically_normal());
  }
  c.compiler_script = path("compiler.script");
  if (c.compiler == "scripted" && c.compiler_script.empty()) throw Error(Errc::ConfigError, "compiler.script is required");

  c.fuzzer = f.get_string("fuzzer.kind", c.fuzzer);
  require_one_of(c.fuzzer, {"libfuzzer", "scripted"}, "fuzzer.kind");
  c.fuzzer_run = f.get_string("fuzzer.run", c.fuzzer_run);
  c.fuzzer_coverage = f.get_string("fuzzer.coverage", "");
  c.fuzzer_script = path("fuzzer.script");
  if (c.fuzzer == "scripted" && c.fuzzer_script.empty()) throw Error(Errc::ConfigError, "fuzzer.script is required");

  c.cwe_threshold = f.get_real("triage.cwe_threshold", c.cwe_threshold);

  require_non_negative(c.top_k, "retrieval.top_k");
  require_non_negative(c.repair_max_iterations, "repair.max_iterations");
  require_non_negative(c.mutation_max_iterations, "mutation.max_iterations");
  require_non_negative(c.fuzz_time_budget_seconds, "fuzz.time_budget_seconds");
  require_non_negative(c.max_seeds, "fuzz.max_seeds");
  require_non_negative(c.max_retries, "llm.max_retries");
  require_non_negative(c.backoff_base_ms, "llm.backoff_base_ms");
  require_non_negative(c.backoff_max_ms, "llm.backoff_max_ms");
  if (c.call_cap) require_non_negative(*c.call_cap, "llm.call_cap");
  if (c.max_combination_len < 1) throw Error(Errc::ConfigError, "max_combination_len must be >= 1");
  if (c.workers < 1) throw Error(Errc::ConfigError, "workers must be >= 1");
  if (c.max_concurrent_llm < 1) throw Error(Errc::ConfigError, "llm.max_concurrent must be >= 1");
  if (c.embedder_dim < 1) throw Error(Errc::ConfigError, "embedder.dim must be >= 1");
  if (c.similarity_threshold < -1.0 || c.similarity_threshold > 1.0) {
    throw Error(Errc::ConfigError, "retrieval.similarity_threshold must be within [-1, 1]");
  }
  if (c.cwe_threshold < -1.0 || c.cwe_threshold > 1.0) throw Error(Errc::ConfigError, "triage.cwe_threshold must be within [-1, 1]");
  return c;
}

CampaignConfig load_campaign_config(const std::filesystem::path& path) {
  const auto file = ConfigFile::load(path);
  const auto dir = std::filesystem::absolute(path).parent_path();
  return campaign_config_from(file, dir);
}

}  // namespace kgfuzz
