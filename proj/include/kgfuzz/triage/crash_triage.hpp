#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgfuzz/common/io.hpp"
#include "kgfuzz/driver/driver_factory.hpp"
#include "kgfuzz/graph/knowledge_graph.hpp"
#include "kgfuzz/index/graph_index.hpp"

namespace kgfuzz {

class Embedder;
class LlmGateway;
class PromptTemplates;

enum class SanitizerKind { Asan, Ubsan, Msan, Other };
std::string_view to_string(SanitizerKind k) noexcept;

struct StackFrame {
  std::string function;
  std::string file;  // as printed by the sanitizer, column dropped; empty if unknown
  int line = 0;
  bool operator==(const StackFrame&) const = default;
};

/// A crash as produced by a fuzzer run, before parsing.
struct RawCrash {
  std::string driver_id;
  std::string input_id;
  std::string report;
  bool operator==(const RawCrash&) const = default;
};

json to_json(const RawCrash& c);
RawCrash raw_crash_from_json(const json& j);

struct CrashRecord {
  std::string crash_id;
  SanitizerKind sanitizer = SanitizerKind::Other;
  std::vector<StackFrame> stack_frames;  // first stack of the report, runtime frames removed
  std::string driver_id;
  std::string crashing_input;  // seed id
  std::string raw_report;
  std::size_t duplicates = 1;  // occurrences folded into this record
  bool operator==(const CrashRecord&) const = default;
};

json to_json(const CrashRecord& r);
CrashRecord crash_record_from_json(const json& j);

/// Frames of the first `#N 0xADDR in func file:line` stack, skipping sanitizer runtime frames.
std::vector<StackFrame> parse_stack_frames(const std::string& report);
SanitizerKind detect_sanitizer(const std::string& report);

/// Hash of the top three (function, file) frames.
std::string crash_id_for(const std::vector<StackFrame>& frames);

/// Errors: UnparseableReport when no stack frame is found.
CrashRecord parse_crash(const RawCrash& raw);

/// One record per crash_id, earliest kept, duplicates counted. Unparseable reports are
/// skipped with a warning naming their index.
std::vector<CrashRecord> dedup_crashes(const std::vector<RawCrash>& raws, std::vector<std::string>* warnings = nullptr);

/// Same folding over already-parsed records; idempotent.
std::vector<CrashRecord> dedup_records(const std::vector<CrashRecord>& records);

struct CrashContext {
  std::string driver_slice;
  std::vector<std::pair<std::string, std::string>> library_sources;  // (function, source)
  std::vector<std::string> api_summaries;
  std::vector<StackFrame> library_frames;
  std::vector<std::string> notes;  // FrameUnresolved entries

  bool empty() const noexcept;
  std::string render() const;
};

/// Driver source +-10 lines around driver frames, source of library functions in the
/// stack, and the combination's API summaries. Unresolvable frames are noted, not fatal.
CrashContext extract_crash_context(const CrashRecord& record, const FuzzDriver* driver, const CodeKnowledgeGraph& graph);

/// Bullet lines of the model's answer; prose without bullets becomes one hypothesis.
std::vector<std::string> parse_hypotheses(const std::string& answer);

/// Errors are absorbed: an LLM failure returns [].
std::vector<std::string> hypothesize_patterns(const CrashRecord& record, const CrashContext& context, LlmGateway& llm,
                                              const PromptTemplates& prompts);

struct CweEntry {
  std::string cwe_id;
  std::string description;
  std::string example_code;
  bool operator==(const CweEntry&) const = default;
};

/// JSON list of {cwe_id, description, example_code}. Errors: ParseFailure for empty texts.
std::vector<CweEntry> cwe_kb_from_json(const json& j);
std::vector<CweEntry> load_cwe_kb(const std::filesystem::path& path);

inline constexpr double kDefaultCweThreshold = 0.5;

/// Embedding index over CWE descriptions (chunk id = cwe_id).
PropertyGraphIndex build_cwe_index(const std::vector<CweEntry>& kb, Embedder& embedder);

struct CweMatch {
  std::string cwe_id;
  double score = 0.0;
  bool operator==(const CweMatch&) const = default;
};

/// Matches at or above `threshold`, deduplicated by cwe_id keeping the best score, sorted by
/// score then id. Errors: EmptyKb.
std::vector<CweMatch> match_cwe(const std::vector<std::string>& hypotheses, const std::vector<CweEntry>& kb,
                                const PropertyGraphIndex& index, Embedder& embedder,
                                double threshold = kDefaultCweThreshold);

enum class CrashClass { MisuseCrash, SuspectedLibraryBug };
enum class Confidence { Low, Medium, High };
std::string_view to_string(CrashClass c) noexcept;
std::string_view to_string(Confidence c) noexcept;

struct CrashVerdict {
  std::string crash_id;
  std::string driver_id;
  CrashClass classification = CrashClass::MisuseCrash;
  Confidence confidence = Confidence::Low;
  std::vector<std::string> matched_cwes;
  std::string rationale;
  std::vector<StackFrame> library_frames;
  std::size_t duplicates = 1;
  bool operator==(const CrashVerdict&) const = default;
};

json to_json(const CrashVerdict& v);

/// Interprets the final answer. Only a single well-formed LIBRARY_BUG verdict with medium
/// or high confidence, a rationale and at least one library frame in the context gives
/// SuspectedLibraryBug; a well-formed MISUSE verdict keeps its confidence; everything else
/// is MisuseCrash with Low confidence.
CrashVerdict interpret_verdict(const CrashRecord& record, const CrashContext& context,
                               const std::vector<CweMatch>& matches, const std::string& answer);

/// Final LLM turn over the assembled evidence. Never throws on LLM failure.
CrashVerdict classify(const CrashRecord& record, const CrashContext& context, const std::vector<std::string>& hypotheses,
                      const std::vector<CweMatch>& matches, LlmGateway& llm, const PromptTemplates& prompts);

struct TriageInputs {
  const CodeKnowledgeGraph& graph;
  const std::vector<FuzzDriver>& drivers;
  const std::vector<CweEntry>& cwe_kb;
  const PropertyGraphIndex& cwe_index;
  Embedder& embedder;
  LlmGateway& llm;
  const PromptTemplates& prompts;
  double cwe_threshold = kDefaultCweThreshold;
};

/// Runs the three steps for every record on up to `workers` threads; verdicts are returned
/// in record order.
std::vector<CrashVerdict> triage_crashes(const std::vector<CrashRecord>& records, const TriageInputs& in,
                                         std::size_t workers = 1);

/// One verdict per line.
void write_triage_log(const std::filesystem::path& path, const std::vector<CrashVerdict>& verdicts);
std::vector<json> read_triage_log(const std::filesystem::path& path);

}  // namespace kgfuzz
