#include "kgfuzz/driver/driver_factory.hpp"

#include <algorithm>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/hash.hpp"
#include "kgfuzz/common/text.hpp"
#include "kgfuzz/llm/gateway.hpp"
#include "kgfuzz/llm/prompts.hpp"

namespace kgfuzz {

void DriverMemory::push(ChatMessage turn) {
  turns_.push_back(std::move(turn));
  if (turns_.size() > cap_) turns_.erase(turns_.begin(), turns_.begin() + (turns_.size() - cap_));
}

PromptBundle build_prompt(const ApiCombination& combination, const CodeKnowledgeGraph& graph,
                          const PromptTemplates& prompts) {
  PromptBundle b;
  b.combination = combination;
  b.system = prompts.get("driver.system");
  b.task_definition = prompts.render("driver.task", {{"apis", text::join(combination.apis, ", ")}});
  for (const auto& name : combination.apis) {
    const FunctionNode* node = graph.api_node(name);
    if (!node) node = graph.function_by_name(name);
    if (!node) throw Error(Errc::MissingApiNode, name);
    const ApiSpec* spec = graph.api_spec(name);
    std::string header = node->header;
    if (header.empty() && spec) header = spec->header;
    b.api_context.push_back({name, node->signature, node->source_code, header, node->summary});
  }
  b.error_handling_rules = prompts.get("driver.error_handling");
  return b;
}

std::vector<ChatMessage> render_messages(const PromptBundle& bundle, const PromptTemplates& prompts) {
  std::string user = bundle.task_definition + "\n\n";
  for (const auto& e : bundle.api_context) {
    user += prompts.render("driver.api_context", {{"name", e.name},
                                                  {"header", e.header.empty() ? "(unknown)" : e.header},
                                                  {"signature", e.signature},
                                                  {"summary", e.summary.empty() ? "(none)" : e.summary},
                                                  {"source", e.source_code}});
    user += "\n\n";
  }
  user += bundle.error_handling_rules;
  std::vector<ChatMessage> out = {{"system", bundle.system}, {"user", user}};
  for (const auto& t : bundle.memory.turns()) out.push_back(t);
  return out;
}

std::string_view to_string(DriverStatus status) noexcept {
  switch (status) {
    case DriverStatus::Generated: return "Generated";
    case DriverStatus::Compiled: return "Compiled";
    case DriverStatus::RepairFailed: return "RepairFailed";
    case DriverStatus::GenerationFailed: return "GenerationFailed";
  }
  return "?";
}

DriverStatus driver_status_from_string(std::string_view s) {
  for (auto st : {DriverStatus::Generated, DriverStatus::Compiled, DriverStatus::RepairFailed,
                  DriverStatus::GenerationFailed}) {
    if (to_string(st) == s) return st;
  }
  throw Error(Errc::SchemaVersionMismatch, "unknown driver status " + std::string(s));
}

std::string make_driver_id(const ApiCombination& c) {
  return short_id("drv_", c.target_api + "|" + text::join(c.apis, ",") + "|" + std::to_string(c.generation), 12);
}

std::string strip_comments_and_strings(const std::string& src) {
  std::string out = src;
  enum { Code, Line, Block, Str, Chr } st = Code;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const char c = src[i];
    const char n = i + 1 < src.size() ? src[i + 1] : '\0';
    switch (st) {
      case Code:
        if (c == '/' && n == '/') { st = Line; out[i] = out[i + 1] = ' '; ++i; }
        else if (c == '/' && n == '*') { st = Block; out[i] = out[i + 1] = ' '; ++i; }
        else if (c == '"') st = Str;
        else if (c == '\'') st = Chr;
        break;
      case Line:
        if (c == '\n') st = Code; else out[i] = ' ';
        break;
      case Block:
        if (c == '*' && n == '/') { st = Code; out[i] = out[i + 1] = ' '; ++i; }
        else if (c != '\n') out[i] = ' ';
        break;
      case Str:
      case Chr: {
        const char quote = st == Str ? '"' : '\'';
        if (c == '\\' && i + 1 < src.size()) { out[i] = ' '; if (n != '\n') out[i + 1] = ' '; ++i; }
        else if (c == quote) st = Code;
        else if (c == '\n') st = Code;  // unterminated literal; resync at end of line
        else out[i] = ' ';
        break;
      }
    }
  }
  return out;
}

StructuralCheck structural_check(const std::string& source, const std::vector<std::string>& apis) {
  const std::string code = strip_comments_and_strings(source);
  StructuralCheck r;
  std::vector<std::string> called;
  bool entry = false;
  for (std::size_t i = 0; i < code.size();) {
    if (!text::is_ident_start(code[i]) || (i > 0 && text::is_ident_char(code[i - 1]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < code.size() && text::is_ident_char(code[j])) ++j;
    std::string_view word(code.data() + i, j - i);
    if (word == kFuzzEntryPoint) entry = true;
    std::size_t k = j;
    while (k < code.size() && (code[k] == ' ' || code[k] == '\t' || code[k] == '\n' || code[k] == '\r')) ++k;
    if (k < code.size() && code[k] == '(') called.emplace_back(word);
    i = j;
  }
  if (!entry) r.problems.push_back("missing " + std::string(kFuzzEntryPoint));
  for (const auto& api : apis) {
    if (std::find(called.begin(), called.end(), api) == called.end()) r.problems.push_back("no call to " + api);
  }
  r.ok = r.problems.empty();
  return r;
}

FuzzDriver try_generate_driver(PromptBundle bundle, LlmGateway& llm, const PromptTemplates& prompts) {
  FuzzDriver d;
  d.combination = bundle.combination;
  d.driver_id = make_driver_id(bundle.combination);

  for (int attempt = 0; attempt < 2; ++attempt) {
    auto req = ChatRequest::make(LlmRole::Coder, render_messages(bundle, prompts));
    d.transcript_digest = request_digest(req);
    const std::string response = llm.complete(req);
    bundle.memory.push({"assistant", response});
    d.source = extract_code_block(response);
    auto check = structural_check(d.source, bundle.combination.apis);
    d.problems = check.problems;
    if (check.ok) {
      d.status = DriverStatus::Generated;
      d.memory = bundle.memory;
      return d;
    }
    bundle.memory.push({"user", prompts.render("driver.corrective", {{"problems", text::join(check.problems, "; ")},
                                                                     {"apis", text::join(bundle.combination.apis, ", ")}})});
  }
  d.status = DriverStatus::GenerationFailed;
  d.memory = bundle.memory;
  return d;
}

FuzzDriver generate_driver(PromptBundle bundle, LlmGateway& llm, const PromptTemplates& prompts) {
  auto d = try_generate_driver(std::move(bundle), llm, prompts);
  if (d.status == DriverStatus::GenerationFailed) {
    throw Error(Errc::StructuralCheckFailed, d.driver_id + ": " + text::join(d.problems, "; "));
  }
  return d;
}

json driver_meta_json(const FuzzDriver& d) {
  json memory = json::array();
  for (const auto& t : d.memory.turns()) memory.push_back({{"speaker", t.speaker}, {"text", t.text}});
  return {{"driver_id", d.driver_id},
          {"combination", to_json(d.combination)},
          {"status", to_string(d.status)},
          {"repair_iterations_used", d.repair_iterations_used},
          {"transcript_digest", d.transcript_digest},
          {"problems", d.problems},
          {"memory", memory}};
}

FuzzDriver driver_from_meta(const json& meta, std::string source) {
  FuzzDriver d;
  d.driver_id = meta.at("driver_id");
  d.combination = combination_from_json(meta.at("combination"));
  d.status = driver_status_from_string(meta.at("status").get<std::string>());
  d.repair_iterations_used = meta.at("repair_iterations_used");
  d.transcript_digest = meta.value("transcript_digest", "");
  d.problems = meta.value("problems", std::vector<std::string>{});
  for (const auto& t : meta.value("memory", json::array())) d.memory.push({t.at("speaker"), t.at("text")});
  d.source = std::move(source);
  return d;
}

void save_driver(const FuzzDriver& d, const std::filesystem::path& dir) {
  write_text_file(dir / (d.driver_id + ".c"), d.source);
  write_json_file(dir / (d.driver_id + ".meta.json"), driver_meta_json(d));
}

FuzzDriver load_driver(const std::filesystem::path& dir, const std::string& driver_id) {
  const auto meta = read_json_file(dir / (driver_id + ".meta.json"));
  return driver_from_meta(meta, read_text_file(dir / (driver_id + ".c")));
}

std::vector<FuzzDriver> load_drivers(const std::filesystem::path& dir) {
  std::vector<std::string> ids;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    const std::string name = e.path().filename().string();
    const std::string suffix = ".meta.json";
    if (name.size() > suffix.size() && name.ends_with(suffix)) ids.push_back(name.substr(0, name.size() - suffix.size()));
  }
  if (ec) throw Error(Errc::MissingArtifact, dir.string());
  std::sort(ids.begin(), ids.end());
  std::vector<FuzzDriver> out;
  for (const auto& id : ids) out.push_back(load_driver(dir, id));
  return out;
}

}  // namespace kgfuzz
