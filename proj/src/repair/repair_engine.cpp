#include "kgfuzz/repair/repair_engine.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <regex>
#include <set>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/text.hpp"
#include "kgfuzz/llm/gateway.hpp"
#include "kgfuzz/llm/prompts.hpp"

namespace kgfuzz {

std::string_view to_string(KbOrigin origin) noexcept {
  return origin == KbOrigin::Seed ? "Seed" : "LearnedDriver";
}

bool UsageKnowledgeBase::add(KbEntry entry) {
  for (const auto& e : entries_) {
    if (e.key == entry.key && e.snippet == entry.snippet) return false;
  }
  entries_.push_back(std::move(entry));
  ++version_;
  return true;
}

UsageKnowledgeBase init_kb(const std::vector<std::pair<std::string, std::string>>& seed_samples) {
  UsageKnowledgeBase kb;
  for (const auto& [api, snippet] : seed_samples) kb.add({api, snippet, KbOrigin::Seed});
  return kb;
}

std::vector<std::pair<std::string, std::string>> header_seed_samples(const std::vector<ApiSpec>& apis) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& a : apis) {
    std::string snippet;
    if (!a.header.empty()) snippet += "#include \"" + a.header + "\"\n";
    snippet += a.signature + ";";
    out.emplace_back(a.name, snippet);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> driver_seed_samples(const std::filesystem::path& dir,
                                                                     const std::vector<ApiSpec>& apis) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    if (e.is_regular_file() && e.path().extension() == ".c") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : files) {
    const std::string src = read_text_file(f);
    std::vector<std::string> used;
    for (const auto& a : apis) {
      if (text::contains_word(src, a.name)) used.push_back(a.name);
    }
    if (!used.empty()) out.emplace_back(text::join(used, " "), src);
  }
  return out;
}

json to_json(const UsageKnowledgeBase& kb) {
  json entries = json::array();
  for (const auto& e : kb.entries()) {
    entries.push_back({{"key", e.key}, {"snippet", e.snippet}, {"origin", to_string(e.origin)}});
  }
  return {{"version", kb.version()}, {"entries", entries}};
}

UsageKnowledgeBase kb_from_json(const json& j) {
  UsageKnowledgeBase kb;
  for (const auto& e : j.at("entries")) {
    const std::string origin = e.at("origin");
    kb.add({e.at("key"), e.at("snippet"), origin == "Seed" ? KbOrigin::Seed : KbOrigin::LearnedDriver});
  }
  if (kb.version() != j.at("version").get<std::size_t>()) {
    throw Error(Errc::SchemaVersionMismatch, "knowledge base version does not match its entries");
  }
  return kb;
}

void save_kb(const UsageKnowledgeBase& kb, const std::filesystem::path& path) { write_json_file(path, to_json(kb)); }
UsageKnowledgeBase load_kb(const std::filesystem::path& path) { return kb_from_json(read_json_file(path)); }

std::vector<Diagnostic> parse_diagnostics(const std::string& output) {
  static const std::regex kLine(R"(^(.*?):(\d+):(?:(\d+):)?\s*(fatal error|error|warning|note):\s*(.*)$)");
  std::vector<Diagnostic> out;
  for (const auto& line : text::split_lines(output)) {
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) continue;
    Diagnostic d;
    d.file = m[1];
    d.line = std::stoi(m[2]);
    d.column = m[3].matched ? std::stoi(m[3]) : 0;
    const std::string sev = m[4];
    d.severity = sev == "warning" ? Severity::Warning : sev == "note" ? Severity::Note : Severity::Error;
    d.message = m[5];
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

std::string shell_quote(const std::string& s) { return "'" + text::replace_all(s, "'", "'\\''") + "'"; }

bool has_error(const std::vector<Diagnostic>& ds) {
  return std::any_of(ds.begin(), ds.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

}  // namespace

std::string CommandCompilerRunner::command_for(const std::filesystem::path& source,
                                               const std::filesystem::path& output) const {
  std::vector<std::string> inc;
  for (const auto& d : config_.include_dirs) inc.push_back("-I" + shell_quote(d.string()));
  return text::render_command(config_.command_template,
                      {{"src", shell_quote(source.string())}, {"out", shell_quote(output.string())}, {"includes", text::join(inc, " ")}});
}

CompileResult CommandCompilerRunner::compile(const std::filesystem::path& source, const std::filesystem::path& output) {
  ++calls_;
  const std::string cmd = command_for(source, output) + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw Error(Errc::CompilerUnavailable, "cannot start: " + cmd);
  CompileResult r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.raw_output.append(buf, n);
  const int status = ::pclose(pipe);
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (code == 127 || code == 126) throw Error(Errc::CompilerUnavailable, text::trim(r.raw_output).empty() ? cmd : r.raw_output);
  r.diagnostics = parse_diagnostics(r.raw_output);
  if (code != 0 && !has_error(r.diagnostics)) {
    // Linker and driver failures do not follow the file:line format.
    auto lines = text::split_lines(text::trim(r.raw_output));
    r.diagnostics.push_back({source.filename().string(), 0, 0, Severity::Error,
                             lines.empty() ? "compiler exited with status " + std::to_string(code) : lines.back()});
  }
  r.success = code == 0 && !has_error(r.diagnostics);
  return r;
}

ScriptedCompilerRunner ScriptedCompilerRunner::from_rules(std::vector<Rule> rules) {
  ScriptedCompilerRunner r;
  r.rules_ = std::move(rules);
  return r;
}

ScriptedCompilerRunner ScriptedCompilerRunner::from_sequence(std::vector<CompileResult> results) {
  ScriptedCompilerRunner r;
  r.sequence_ = std::move(results);
  r.use_sequence_ = true;
  return r;
}

ScriptedCompilerRunner ScriptedCompilerRunner::always_unavailable() {
  ScriptedCompilerRunner r;
  r.unavailable_ = true;
  return r;
}

ScriptedCompilerRunner ScriptedCompilerRunner::from_json(const json& j) {
  if (j.contains("sequence")) {
    std::vector<CompileResult> seq;
    for (const auto& step : j.at("sequence")) {
      CompileResult c;
      if (step.is_boolean() && step.get<bool>()) {
        c.success = true;
      } else {
        c.raw_output = step.is_string() ? step.get<std::string>() : "scripted: error: failure";
        c.diagnostics = parse_diagnostics(c.raw_output);
        c.success = false;
      }
      seq.push_back(std::move(c));
    }
    return from_sequence(std::move(seq));
  }
  std::vector<Rule> rules;
  for (const auto& r : j.value("rules", json::array())) {
    rules.push_back({r.value("require", ""), r.value("forbid", ""), r.at("error").get<std::string>()});
  }
  return from_rules(std::move(rules));
}

CompileResult ScriptedCompilerRunner::compile(const std::filesystem::path& source, const std::filesystem::path&) {
  if (unavailable_) throw Error(Errc::CompilerUnavailable, "scripted compiler unavailable");
  ++calls_;
  if (use_sequence_) {
    if (sequence_.empty()) return {true, {}, ""};
    return sequence_[std::min(calls_ - 1, sequence_.size() - 1)];
  }
  const std::string src = read_text_file(source);
  CompileResult r;
  for (const auto& rule : rules_) {
    const bool fired = (!rule.require.empty() && src.find(rule.require) == std::string::npos) ||
                       (!rule.forbid.empty() && src.find(rule.forbid) != std::string::npos);
    if (fired) r.raw_output += rule.diagnostic + "\n";
  }
  r.diagnostics = parse_diagnostics(r.raw_output);
  r.success = !has_error(r.diagnostics);
  return r;
}

std::string construct_query(const std::vector<Diagnostic>& diagnostics) {
  static const std::regex kLineCol(R"(:\d+(:\d+)?)");
  static const std::regex kQuoted(R"(['"‘’“”`]([A-Za-z_][A-Za-z0-9_]*)['"‘’“”`])");
  std::vector<std::string> lines;
  std::vector<std::string> idents;
  for (const auto& d : diagnostics) {
    if (d.severity != Severity::Error) continue;
    std::string msg;
    for (const auto& word : text::split(d.message, ' ')) {
      if (!msg.empty()) msg += ' ';
      msg += word.find('/') != std::string::npos ? std::string(text::basename(word)) : word;
    }
    msg = std::regex_replace(msg, kLineCol, "");
    std::string line = std::string(text::basename(d.file)) + ": " + msg;
    if (std::find(lines.begin(), lines.end(), line) == lines.end()) lines.push_back(line);
    for (std::sregex_iterator it(msg.begin(), msg.end(), kQuoted), end; it != end; ++it) {
      const std::string id = (*it)[1];
      if (std::find(idents.begin(), idents.end(), id) == idents.end()) idents.push_back(id);
    }
  }
  if (lines.empty()) throw Error(Errc::NoErrors, "no error diagnostics");
  std::string q = text::join(lines, "\n");
  if (!idents.empty()) q += "\n" + text::join(idents, " ");
  return q;
}

std::vector<KbEntry> query_kb(const UsageKnowledgeBase& kb, const std::string& query, std::size_t top) {
  // Words that appear in almost every diagnostic and would match any snippet.
  static const std::set<std::string> kStop = {
      "error",    "warning",  "note",     "of",       "to",     "in",        "for",   "the",      "a",
      "an",       "is",       "not",      "use",      "undeclared", "identifier", "function", "implicit",
      "declaration", "type",  "incompatible", "pointer", "integer", "call", "too", "few", "many",
      "arguments", "expected", "unknown", "c",        "h",      "int",       "char",  "void",     "const",
      "struct",   "size_t",   "uint8_t",  "return",   "with",   "from",      "invalid", "member", "file",
      "did",      "you",      "mean",     "ISO",      "C99",    "and",       "fatal", "found"};
  std::set<std::string> tokens;
  for (auto& t : text::identifiers(query)) {
    if (!kStop.count(t)) tokens.insert(std::move(t));
  }
  struct Scored {
    std::size_t index;
    std::size_t score;
  };
  std::vector<Scored> scored;
  const auto& entries = kb.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    std::set<std::string> key_ids, snip_ids;
    for (auto& t : text::identifiers(entries[i].key)) key_ids.insert(std::move(t));
    for (auto& t : text::identifiers(entries[i].snippet)) snip_ids.insert(std::move(t));
    std::size_t s = 0;
    for (const auto& t : tokens) {
      if (key_ids.count(t)) s += 2;
      if (snip_ids.count(t)) s += 1;
    }
    if (s > 0 && !entries[i].key.empty() && query.find(entries[i].key) != std::string::npos) s += 3;
    if (s > 0) scored.push_back({i, s});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  std::vector<KbEntry> out;
  for (std::size_t i = 0; i < scored.size() && i < top; ++i) out.push_back(entries[scored[i].index]);
  return out;
}

std::filesystem::path driver_source_path(const std::filesystem::path& work_dir, const FuzzDriver& driver) {
  return work_dir / (driver.driver_id + ".c");
}

std::filesystem::path driver_binary_path(const std::filesystem::path& work_dir, const FuzzDriver& driver) {
  return work_dir / driver.driver_id;
}

RepairResult repair_loop(FuzzDriver driver, UsageKnowledgeBase kb, CompilerRunner& compiler, LlmGateway& llm,
                         const PromptTemplates& prompts, const RepairSettings& settings) {
  RepairResult res;
  const auto src_path = driver_source_path(settings.work_dir, driver);
  const auto bin_path = driver_binary_path(settings.work_dir, driver);
  int i = 0;
  bool compiled = false;
  while (i < settings.max_iterations && !compiled) {
    write_text_file(src_path, driver.source);
    CompileResult r = compiler.compile(src_path, bin_path);
    ++res.compile_calls;
    if (r.success) {
      compiled = true;
      kb.add({driver.driver_id + " " + text::join(driver.combination.apis, " "), driver.source, KbOrigin::LearnedDriver});
    } else {
      std::vector<Diagnostic> errors;
      for (const auto& d : r.diagnostics) {
        if (d.severity == Severity::Error) errors.push_back(d);
      }
      if (errors.empty()) errors.push_back({src_path.filename().string(), 0, 0, Severity::Error, "compilation failed"});
      const std::string query = construct_query(errors);
      std::string cases;
      for (const auto& e : query_kb(kb, query)) cases += "// " + e.key + "\n" + e.snippet + "\n\n";
      if (cases.empty()) cases = "(none)\n";
      std::string error_text;
      for (const auto& d : errors) {
        error_text += std::string(text::basename(d.file)) + ":" + std::to_string(d.line) + ": error: " + d.message + "\n";
      }
      std::vector<ChatMessage> msgs = {{"system", prompts.get("repair.system")}};
      for (const auto& t : driver.memory.turns()) msgs.push_back(t);
      ChatMessage user{"user", prompts.render("repair.user", {{"errors", error_text},
                                                              {"cases", cases},
                                                              {"source", driver.source},
                                                              {"apis", text::join(driver.combination.apis, ", ")}})};
      msgs.push_back(user);
      auto req = ChatRequest::make(LlmRole::Coder, std::move(msgs));
      driver.transcript_digest = request_digest(req);
      try {
        const std::string response = llm.complete(req);
        driver.memory.push(user);
        driver.memory.push({"assistant", response});
        driver.source = extract_code_block(response);
      } catch (const Error& e) {
        if (!is_llm_error(e)) throw;
        res.warnings.push_back(driver.driver_id + ": repair turn " + std::to_string(i + 1) + " failed: " + e.what());
      }
    }
    ++i;
  }
  driver.status = compiled ? DriverStatus::Compiled : DriverStatus::RepairFailed;
  driver.repair_iterations_used = i;
  res.driver = std::move(driver);
  res.kb = std::move(kb);
  return res;
}

}  // namespace kgfuzz
