#include "kgfuzz/triage/crash_triage.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/hash.hpp"
#include "kgfuzz/common/parallel.hpp"
#include "kgfuzz/common/text.hpp"
#include "kgfuzz/index/embedder.hpp"
#include "kgfuzz/llm/gateway.hpp"
#include "kgfuzz/llm/prompts.hpp"

namespace kgfuzz {

std::string_view to_string(SanitizerKind k) noexcept {
  switch (k) {
    case SanitizerKind::Asan: return "Asan";
    case SanitizerKind::Ubsan: return "Ubsan";
    case SanitizerKind::Msan: return "Msan";
    case SanitizerKind::Other: return "Other";
  }
  return "?";
}

namespace {

SanitizerKind sanitizer_from_string(std::string_view s) {
  for (auto k : {SanitizerKind::Asan, SanitizerKind::Ubsan, SanitizerKind::Msan}) {
    if (to_string(k) == s) return k;
  }
  return SanitizerKind::Other;
}

json frames_json(const std::vector<StackFrame>& frames) {
  json out = json::array();
  for (const auto& f : frames) out.push_back({{"function", f.function}, {"file", f.file}, {"line", f.line}});
  return out;
}

std::vector<StackFrame> frames_from_json(const json& j) {
  std::vector<StackFrame> out;
  for (const auto& f : j) out.push_back({f.at("function"), f.at("file"), f.at("line")});
  return out;
}

bool is_runtime_frame(const StackFrame& f) {
  for (std::string_view p : {"__asan", "__interceptor_", "__sanitizer", "__ubsan", "__msan", "__lsan"}) {
    if (f.function.starts_with(p)) return true;
  }
  const auto base = text::basename(f.file);
  for (std::string_view p : {"asan_", "sanitizer_", "ubsan_", "msan_", "lsan_"}) {
    if (base.starts_with(p)) return true;
  }
  return f.file.find("/compiler-rt/") != std::string::npos;
}

std::string frame_text(const StackFrame& f) {
  std::string s = f.function.empty() ? "?" : f.function;
  if (!f.file.empty()) s += " (" + f.file + ":" + std::to_string(f.line) + ")";
  return s;
}

}  // namespace

json to_json(const RawCrash& c) {
  return {{"driver_id", c.driver_id}, {"input_id", c.input_id}, {"report", c.report}};
}

RawCrash raw_crash_from_json(const json& j) { return {j.at("driver_id"), j.at("input_id"), j.at("report")}; }

json to_json(const CrashRecord& r) {
  return {{"crash_id", r.crash_id},         {"sanitizer", to_string(r.sanitizer)},
          {"stack_frames", frames_json(r.stack_frames)}, {"driver_id", r.driver_id},
          {"crashing_input", r.crashing_input}, {"raw_report", r.raw_report},
          {"duplicates", r.duplicates}};
}

CrashRecord crash_record_from_json(const json& j) {
  CrashRecord r;
  r.crash_id = j.at("crash_id");
  r.sanitizer = sanitizer_from_string(j.at("sanitizer").get<std::string>());
  r.stack_frames = frames_from_json(j.at("stack_frames"));
  r.driver_id = j.at("driver_id");
  r.crashing_input = j.at("crashing_input");
  r.raw_report = j.at("raw_report");
  r.duplicates = j.value("duplicates", std::size_t{1});
  return r;
}

std::vector<StackFrame> parse_stack_frames(const std::string& report) {
  static const std::regex kFrame(R"(^\s*#(\d+)\s+0x[0-9a-fA-F]+\s+in\s+(.+?)\s*$)");
  static const std::regex kLocation(R"(^(.*?)\s+(\S+?):(\d+)(?::\d+)?$)");
  static const std::regex kModule(R"(^(.*?)\s+\(.*\)$)");
  std::vector<StackFrame> frames;
  bool started = false;
  for (const auto& line : text::split_lines(report)) {
    std::smatch m;
    if (!std::regex_match(line, m, kFrame)) {
      if (started && text::trim(line).empty()) break;  // blank line ends the first stack
      continue;
    }
    if (m[1] == "0" && started) break;  // second stack begins
    started = true;
    const std::string rest = m[2];
    StackFrame f;
    std::smatch lm;
    if (std::regex_match(rest, lm, kLocation)) {
      f.function = lm[1];
      f.file = lm[2];
      f.line = std::stoi(lm[3]);
    } else if (std::regex_match(rest, lm, kModule)) {
      f.function = lm[1];
    } else {
      f.function = rest;
    }
    if (f.function.empty()) {
      // Location only, no symbol.
      f.function = "?";
    }
    if (!is_runtime_frame(f)) frames.push_back(std::move(f));
  }
  return frames;
}

SanitizerKind detect_sanitizer(const std::string& report) {
  if (report.find("MemorySanitizer") != std::string::npos) return SanitizerKind::Msan;
  if (report.find("AddressSanitizer") != std::string::npos || report.find("LeakSanitizer") != std::string::npos) {
    return SanitizerKind::Asan;
  }
  if (report.find("UndefinedBehaviorSanitizer") != std::string::npos || report.find("runtime error:") != std::string::npos) {
    return SanitizerKind::Ubsan;
  }
  return SanitizerKind::Other;
}

std::string crash_id_for(const std::vector<StackFrame>& frames) {
  std::string key;
  for (std::size_t i = 0; i < frames.size() && i < 3; ++i) key += frames[i].function + "@" + frames[i].file + "\n";
  return short_id("crash_", key, 16);
}

CrashRecord parse_crash(const RawCrash& raw) {
  CrashRecord r;
  r.stack_frames = parse_stack_frames(raw.report);
  if (r.stack_frames.empty()) throw Error(Errc::UnparseableReport, "no stack frames in crash report");
  r.crash_id = crash_id_for(r.stack_frames);
  r.sanitizer = detect_sanitizer(raw.report);
  r.driver_id = raw.driver_id;
  r.crashing_input = raw.input_id;
  r.raw_report = raw.report;
  return r;
}

std::vector<CrashRecord> dedup_records(const std::vector<CrashRecord>& records) {
  std::vector<CrashRecord> out;
  std::map<std::string, std::size_t> seen;
  for (const auto& r : records) {
    auto [it, inserted] = seen.emplace(r.crash_id, out.size());
    if (inserted) {
      out.push_back(r);
    } else {
      out[it->second].duplicates += r.duplicates;
    }
  }
  return out;
}

std::vector<CrashRecord> dedup_crashes(const std::vector<RawCrash>& raws, std::vector<std::string>* warnings) {
  std::vector<CrashRecord> parsed;
  for (std::size_t i = 0; i < raws.size(); ++i) {
    try {
      parsed.push_back(parse_crash(raws[i]));
    } catch (const Error& e) {
      if (e.code() != Errc::UnparseableReport) throw;
      if (warnings) warnings->push_back("crash report " + std::to_string(i) + " skipped: unparseable");
    }
  }
  return dedup_records(parsed);
}

bool CrashContext::empty() const noexcept {
  return driver_slice.empty() && library_sources.empty() && api_summaries.empty() && notes.empty();
}

std::string CrashContext::render() const {
  std::string out;
  if (!driver_slice.empty()) out += "Driver source around the crash:\n```c\n" + driver_slice + "```\n";
  for (const auto& [name, src] : library_sources) out += "Library function " + name + ":\n```c\n" + src + "\n```\n";
  if (!api_summaries.empty()) out += "API summaries:\n" + text::join(api_summaries, "\n") + "\n";
  if (!notes.empty()) out += "Notes:\n" + text::join(notes, "\n") + "\n";
  return out;
}

CrashContext extract_crash_context(const CrashRecord& record, const FuzzDriver* driver, const CodeKnowledgeGraph& graph) {
  CrashContext ctx;
  std::vector<std::pair<int, int>> ranges;
  const auto file_matches = [](std::string_view frame_file, std::string_view repo_path) {
    if (frame_file.empty() || repo_path.empty()) return false;
    if (frame_file == repo_path) return true;
    return frame_file.size() > repo_path.size() && frame_file.ends_with(repo_path) &&
           frame_file[frame_file.size() - repo_path.size() - 1] == '/';
  };

  for (const auto& f : record.stack_frames) {
    const bool in_driver =
        driver && (f.function == kFuzzEntryPoint || text::basename(f.file) == driver->driver_id + ".c");
    if (in_driver) {
      if (f.line > 0) ranges.emplace_back(std::max(1, f.line - 10), f.line + 10);
      continue;
    }
    const FunctionNode* node = nullptr;
    for (const auto* fn : graph.function_nodes()) {
      if (fn->name == f.function && (f.file.empty() || file_matches(f.file, fn->file_path))) {
        node = fn;
        break;
      }
    }
    if (node) {
      ctx.library_frames.push_back(f);
      const bool have = std::any_of(ctx.library_sources.begin(), ctx.library_sources.end(),
                                    [&](const auto& p) { return p.first == node->name; });
      if (!have) ctx.library_sources.emplace_back(node->name, node->source_code);
      continue;
    }
    ctx.notes.push_back("FrameUnresolved: " + frame_text(f));
  }

  if (driver && !ranges.empty()) {
    std::sort(ranges.begin(), ranges.end());
    const auto lines = text::split_lines(driver->source);
    int last = 0;
    for (auto [lo, hi] : ranges) {
      lo = std::max(lo, last + 1);
      hi = std::min<int>(hi, static_cast<int>(lines.size()));
      for (int l = lo; l <= hi; ++l) ctx.driver_slice += std::to_string(l) + ": " + lines[l - 1] + "\n";
      last = std::max(last, hi);
    }
  }
  if (driver) {
    for (const auto& api : driver->combination.apis) {
      const FunctionNode* n = graph.api_node(api);
      ctx.api_summaries.push_back(api + ": " + (n && !n->summary.empty() ? n->summary : "(no summary)"));
    }
  }
  return ctx;
}

std::vector<std::string> parse_hypotheses(const std::string& answer) {
  static const std::regex kBullet(R"(^\s*(?:[-*+]|\d+[.)])\s+(.*\S)\s*$)");
  std::vector<std::string> out;
  for (const auto& line : text::split_lines(answer)) {
    std::smatch m;
    if (std::regex_match(line, m, kBullet)) out.push_back(m[1]);
  }
  if (out.empty()) {
    const auto whole = text::trim(answer);
    if (!whole.empty()) out.emplace_back(whole);
  }
  return out;
}

namespace {

// Headline of the report without the process id, which differs between runs.
std::string report_summary(const std::string& report) {
  static const std::regex kPid(R"(==\d+==\s*)");
  std::string headline;
  for (const auto& line : text::split_lines(report)) {
    if (line.starts_with("SUMMARY:")) return std::string(text::trim(line));
    if (headline.empty() && (line.find("ERROR:") != std::string::npos || line.find("runtime error:") != std::string::npos)) {
      headline = std::regex_replace(line, kPid, "");
    }
  }
  return headline.empty() ? "(none)" : std::string(text::trim(headline));
}

std::string frames_block(const CrashRecord& r) {
  std::string s;
  for (std::size_t i = 0; i < r.stack_frames.size(); ++i) s += "#" + std::to_string(i) + " " + frame_text(r.stack_frames[i]) + "\n";
  return s;
}

}  // namespace

std::vector<std::string> hypothesize_patterns(const CrashRecord& record, const CrashContext& context, LlmGateway& llm,
                                              const PromptTemplates& prompts) {
  auto req = ChatRequest::make(
      LlmRole::Chat, {{"system", prompts.get("triage_hypothesize.system")},
                      {"user", prompts.render("triage_hypothesize.user", {{"sanitizer", std::string(to_string(record.sanitizer))},
                                                                          {"summary", report_summary(record.raw_report)},
                                                                          {"frames", frames_block(record)},
                                                                          {"context", context.render()}})}});
  try {
    return parse_hypotheses(llm.complete(req));
  } catch (const Error& e) {
    if (!is_llm_error(e)) throw;
    return {};
  }
}

std::vector<CweEntry> cwe_kb_from_json(const json& j) {
  std::vector<CweEntry> out;
  for (const auto& e : j) {
    CweEntry c{e.at("cwe_id"), e.at("description"), e.at("example_code")};
    if (c.cwe_id.empty() || text::trim(c.description).empty() || text::trim(c.example_code).empty()) {
      throw Error(Errc::ParseFailure, "CWE entry with empty field: " + c.cwe_id);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CweEntry> load_cwe_kb(const std::filesystem::path& path) { return cwe_kb_from_json(read_json_file(path)); }

PropertyGraphIndex build_cwe_index(const std::vector<CweEntry>& kb, Embedder& embedder) {
  PropertyGraphIndex index(ChunkKind::NL, embedder.dim(), embedder.fingerprint());
  for (const auto& e : kb) {
    index.add({e.cwe_id, e.cwe_id, ChunkKind::NL, e.description}, embedder.embed(e.description));
  }
  return index;
}

std::vector<CweMatch> match_cwe(const std::vector<std::string>& hypotheses, const std::vector<CweEntry>& kb,
                                const PropertyGraphIndex& index, Embedder& embedder, double threshold) {
  if (kb.empty() || index.size() == 0) throw Error(Errc::EmptyKb, "CWE knowledge base is empty");
  std::map<std::string, double> best;
  for (const auto& h : hypotheses) {
    for (const auto& sc : retrieve_chunks(h, index, {threshold, index.size()}, embedder)) {
      auto [it, inserted] = best.emplace(sc.chunk.chunk_id, sc.score);
      if (!inserted) it->second = std::max(it->second, sc.score);
    }
  }
  std::vector<CweMatch> out;
  for (const auto& [id, score] : best) out.push_back({id, score});
  std::stable_sort(out.begin(), out.end(), [](const CweMatch& a, const CweMatch& b) { return a.score > b.score; });
  return out;
}

std::string_view to_string(CrashClass c) noexcept {
  return c == CrashClass::MisuseCrash ? "MisuseCrash" : "SuspectedLibraryBug";
}

std::string_view to_string(Confidence c) noexcept {
  switch (c) {
    case Confidence::Low: return "Low";
    case Confidence::Medium: return "Medium";
    case Confidence::High: return "High";
  }
  return "?";
}

json to_json(const CrashVerdict& v) {
  return {{"crash_id", v.crash_id},
          {"driver_id", v.driver_id},
          {"classification", to_string(v.classification)},
          {"confidence", to_string(v.confidence)},
          {"matched_cwes", v.matched_cwes},
          {"rationale", v.rationale},
          {"library_frames", frames_json(v.library_frames)},
          {"duplicates", v.duplicates}};
}

namespace {

struct ParsedAnswer {
  std::vector<std::string> verdicts;
  std::vector<std::string> confidences;
  std::string rationale;
  int rationale_fields = 0;
};

ParsedAnswer parse_answer(const std::string& answer) {
  ParsedAnswer p;
  bool in_rationale = false;
  for (const auto& raw : text::split_lines(answer)) {
    std::string line(text::trim(raw));
    const auto field = [&](std::string_view name) -> std::optional<std::string> {
      if (line.size() < name.size()) return std::nullopt;
      for (std::size_t i = 0; i < name.size(); ++i) {
        if (std::toupper(static_cast<unsigned char>(line[i])) != name[i]) return std::nullopt;
      }
      return std::string(text::trim(std::string_view(line).substr(name.size())));
    };
    if (auto v = field("VERDICT:")) {
      p.verdicts.push_back(*v);
      in_rationale = false;
    } else if (auto c = field("CONFIDENCE:")) {
      p.confidences.push_back(*c);
      in_rationale = false;
    } else if (auto r = field("RATIONALE:")) {
      ++p.rationale_fields;
      p.rationale = *r;
      in_rationale = true;
    } else if (in_rationale) {
      if (!p.rationale.empty()) p.rationale += "\n";
      p.rationale += line;
    }
  }
  p.rationale = std::string(text::trim(p.rationale));
  return p;
}

}  // namespace

CrashVerdict interpret_verdict(const CrashRecord& record, const CrashContext& context,
                               const std::vector<CweMatch>& matches, const std::string& answer) {
  CrashVerdict v;
  v.crash_id = record.crash_id;
  v.driver_id = record.driver_id;
  v.duplicates = record.duplicates;
  for (const auto& m : matches) v.matched_cwes.push_back(m.cwe_id);
  v.library_frames = context.library_frames;

  auto defaulted = [&](std::string why) {
    v.classification = CrashClass::MisuseCrash;
    v.confidence = Confidence::Low;
    v.rationale = "defaulted to misuse: " + why;
    return v;
  };

  const ParsedAnswer p = parse_answer(answer);
  if (p.verdicts.size() != 1) return defaulted(p.verdicts.empty() ? "no verdict" : "conflicting verdicts");
  if (p.confidences.size() != 1) return defaulted("confidence missing or repeated");
  if (p.rationale_fields != 1 || p.rationale.empty()) return defaulted("rationale missing");

  std::optional<Confidence> conf;
  if (p.confidences[0] == "LOW") conf = Confidence::Low;
  if (p.confidences[0] == "MEDIUM") conf = Confidence::Medium;
  if (p.confidences[0] == "HIGH") conf = Confidence::High;
  if (!conf) return defaulted("unrecognized confidence");

  if (p.verdicts[0] == "MISUSE") {
    v.classification = CrashClass::MisuseCrash;
    v.confidence = *conf;
    v.rationale = p.rationale;
    return v;
  }
  if (p.verdicts[0] != "LIBRARY_BUG") return defaulted("unrecognized verdict");
  if (*conf == Confidence::Low) return defaulted("library bug claimed with low confidence");
  if (context.library_frames.empty()) return defaulted("library bug claimed but no library frame in the stack");

  v.classification = CrashClass::SuspectedLibraryBug;
  v.confidence = *conf;
  std::vector<std::string> frames;
  for (const auto& f : context.library_frames) frames.push_back(frame_text(f));
  v.rationale = p.rationale + "\nLibrary frames: " + text::join(frames, ", ");
  return v;
}

CrashVerdict classify(const CrashRecord& record, const CrashContext& context, const std::vector<std::string>& hypotheses,
                      const std::vector<CweMatch>& matches, LlmGateway& llm, const PromptTemplates& prompts) {
  std::string hyp;
  for (const auto& h : hypotheses) hyp += "- " + h + "\n";
  if (hyp.empty()) hyp = "(none)\n";
  std::string cwes;
  for (const auto& m : matches) {
    char score[32];
    std::snprintf(score, sizeof score, "%.4f", m.score);
    cwes += m.cwe_id + " (similarity " + score + ")\n";
  }
  if (cwes.empty()) cwes = "(none)\n";
  auto req = ChatRequest::make(
      LlmRole::Chat, {{"system", prompts.get("triage_classify.system")},
                      {"user", prompts.render("triage_classify.user", {{"sanitizer", std::string(to_string(record.sanitizer))},
                                                                       {"summary", report_summary(record.raw_report)},
                                                                       {"frames", frames_block(record)},
                                                                       {"context", context.render()},
                                                                       {"hypotheses", hyp},
                                                                       {"cwes", cwes}})}});
  std::string answer;
  try {
    answer = llm.complete(req);
  } catch (const Error& e) {
    if (!is_llm_error(e)) throw;
    answer.clear();
  }
  return interpret_verdict(record, context, matches, answer);
}

std::vector<CrashVerdict> triage_crashes(const std::vector<CrashRecord>& records, const TriageInputs& in,
                                         std::size_t workers) {
  std::vector<CrashVerdict> out(records.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    const auto& r = records[i];
    const FuzzDriver* driver = nullptr;
    for (const auto& d : in.drivers) {
      if (d.driver_id == r.driver_id) driver = &d;
    }
    const auto ctx = extract_crash_context(r, driver, in.graph);
    const auto hyps = hypothesize_patterns(r, ctx, in.llm, in.prompts);
    std::vector<CweMatch> matches;
    if (!in.cwe_kb.empty()) matches = match_cwe(hyps, in.cwe_kb, in.cwe_index, in.embedder, in.cwe_threshold);
    out[i] = classify(r, ctx, hyps, matches, in.llm, in.prompts);
  });
  return out;
}

void write_triage_log(const std::filesystem::path& path, const std::vector<CrashVerdict>& verdicts) {
  std::string body;
  for (const auto& v : verdicts) body += to_json(v).dump() + "\n";
  write_text_file(path, body);
}

std::vector<json> read_triage_log(const std::filesystem::path& path) {
  std::vector<json> out;
  for (const auto& line : text::split_lines(read_text_file(path))) {
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(Errc::ParseFailure, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace kgfuzz
