#include "kgfuzz/llm/prompts.hpp"

#include <fstream>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/io.hpp"
#include "kgfuzz/common/text.hpp"

namespace kgfuzz {
namespace {

const std::map<std::string, std::string>& builtin_templates() {
  static const std::map<std::string, std::string> kTemplates = {
      {"summarize_function.system",
       "You document C libraries. Describe the purpose of a function and a typical usage scenario "
       "in at most three sentences.\n[task: summarize_function]"},
      {"summarize_function.user",
       "Function: {{name}}\nSignature: {{signature}}\nFile: {{file}}\nSource:\n```c\n{{source}}\n```"},
      {"summarize_file.system",
       "You document C libraries. Give a module overview of a source file in at most three sentences.\n"
       "[task: summarize_file]"},
      {"summarize_file.user", "File: {{path}}\nFunctions:\n{{functions}}"},

      {"combine.query",
       "Which library APIs are functionally related to or called together with {{target}}?\n"
       "Target signature: {{signature}}\nTarget summary: {{summary}}"},
      {"combine_initial.system",
       "You select library APIs that should be exercised together in one fuzz driver.\n[task: combine_initial]"},
      {"combine_initial.user",
       "Query: {{query}}\nKnown library APIs: {{known_apis}}\n\nContext:\n{{chunk}}\n\n"
       "Answer the query using the context. List related APIs from the known list, one per line, "
       "each followed by a short reason."},
      {"combine_refine.system",
       "You select library APIs that should be exercised together in one fuzz driver.\n[task: combine_refine]"},
      {"combine_refine.user",
       "Query: {{query}}\nKnown library APIs: {{known_apis}}\n\nExisting answer:\n{{response}}\n\n"
       "New context:\n{{chunk}}\n\nRefine the existing answer with the new context. Keep what is still "
       "useful, add APIs the new context supports and drop anything that is noise. Reply with the refined "
       "answer only."},
      {"combine_final.system",
       "You select library APIs that should be exercised together in one fuzz driver.\n[task: combine_final]"},
      {"combine_final.user",
       "Query: {{query}}\nKnown library APIs: {{known_apis}}\n\nDraft answer:\n{{response}}\n\n"
       "Output the API names that should be combined with {{target}} in one fuzz driver, at most "
       "{{max_len}} names, one API name per line, nothing else."},
      {"combine_retry.user",
       "Your previous answer contained no name from the known API list. Choose only from: {{known_apis}}. "
       "Output one API name per line, nothing else."},

      {"driver.system",
       "You are an expert in writing libFuzzer fuzz drivers for C libraries.\n[task: generate_driver]"},
      {"driver.task",
       "Write a complete C fuzz driver that tests this API combination: {{apis}}.\n"
       "Every API in the combination must be called inside "
       "int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size). Derive all arguments from data and "
       "size. Include every header the driver needs. Return the complete source in a single ```c code block."},
      {"driver.api_context",
       "API: {{name}}\nHeader: {{header}}\nSignature: {{signature}}\nSummary: {{summary}}\n"
       "Source:\n```c\n{{source}}\n```"},
      {"driver.error_handling",
       "Error handling rules:\n"
       "- Check every return value and pointer before use; on failure release what was acquired and return 0.\n"
       "- Never read past size bytes of data and guard every length computation against overflow.\n"
       "- Free every allocation on all paths and never call exit or abort.\n"
       "- Keep the driver deterministic: no state that survives between calls, no randomness, no threads."},
      {"driver.corrective",
       "The driver does not satisfy the requirements: {{problems}}. Rewrite the complete driver so that "
       "LLVMFuzzerTestOneInput exists and calls every API of the combination ({{apis}}). Return the complete "
       "source in a single ```c code block."},

      {"repair.system", "You fix compilation errors in C fuzz drivers.\n[task: repair_driver]"},
      {"repair.user",
       "The following fuzz driver fails to compile.\n\nCompiler errors:\n{{errors}}\n\n"
       "Correct usage examples from the knowledge base:\n{{cases}}\n\nDriver source:\n```c\n{{source}}\n```\n\n"
       "Fix the compilation errors without removing any call to: {{apis}}. Return the complete corrected "
       "source in a single ```c code block."},

      {"seeds.system", "You design fuzzing input seeds.\n[task: generate_seeds]"},
      {"seeds.user",
       "Fuzz driver:\n```c\n{{source}}\n```\n\nValue flow between variables (variable: defined at line -> "
       "used at line):\n{{dataflow}}\n\nAPI signatures:\n{{signatures}}\n\nGenerate up to {{max_seeds}} input "
       "seeds that maximize code coverage, target edge cases and explore boundary conditions of the input "
       "this driver reads. Output one seed per line, each either hex:<hex digits> or str:\"<C-escaped "
       "string>\", nothing else."},

      {"mutate.system",
       "You restructure API combinations of fuzz drivers to reach uncovered library code.\n"
       "[task: mutate_combination]"},
      {"mutate.user",
       "Current API combination: {{current}}\nLow-coverage APIs in priority order (lowest file coverage "
       "first):\n{{query}}\nCombinations already tried without reaching new code: {{tried}}\n"
       "Known library APIs: {{known_apis}}\n\nRestructure the combination so that it exercises the "
       "low-coverage APIs while keeping {{target}}. Output at most {{max_len}} API names, one per line, "
       "nothing else."},

      {"triage_hypothesize.system",
       "You analyze fuzzing crashes step by step.\n[task: hypothesize]"},
      {"triage_hypothesize.user",
       "Step 1 - crash context\nSanitizer: {{sanitizer}}\nReport: {{summary}}\nStack:\n{{frames}}\n\n{{context}}\n\n"
       "Step 2 - list the error patterns that could explain this crash (unsafe memory operations, incorrect "
       "variable assignments, improper control flow conditions and similar). One hypothesis per line, each "
       "starting with \"- \"."},
      {"triage_classify.system",
       "You analyze fuzzing crashes step by step.\n[task: classify]"},
      {"triage_classify.user",
       "Step 1 - crash context\nSanitizer: {{sanitizer}}\nReport: {{summary}}\nStack:\n{{frames}}\n\n{{context}}\n\n"
       "Step 2 - error pattern hypotheses:\n{{hypotheses}}\n\nStep 3 - matching CWE entries:\n{{cwes}}\n\n"
       "Decide whether the crash is caused by misuse of the library API in the fuzz driver or by a bug "
       "inside the library. Treat ambiguous cases as misuse. Answer in exactly this format:\n"
       "VERDICT: MISUSE or LIBRARY_BUG\nCONFIDENCE: LOW, MEDIUM or HIGH\nRATIONALE: <one paragraph>"},
  };
  return kTemplates;
}

}  // namespace

PromptTemplates::PromptTemplates() : templates_(builtin_templates()) {}

std::size_t PromptTemplates::load_overrides(const std::filesystem::path& dir) {
  std::size_t replaced = 0;
  for (auto& [name, body] : templates_) {
    const auto file = dir / (name + ".txt");
    std::error_code ec;
    if (std::filesystem::is_regular_file(file, ec)) {
      body = read_text_file(file);
      ++replaced;
    }
  }
  return replaced;
}

const std::string& PromptTemplates::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error(Errc::ConfigError, "unknown prompt template " + name);
  return it->second;
}

std::string PromptTemplates::render(const std::string& name,
                                    const std::vector<std::pair<std::string, std::string>>& vars) const {
  return text::render(get(name), vars);
}

std::vector<std::string> PromptTemplates::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : templates_) out.push_back(k);
  return out;
}

std::string extract_code_block(const std::string& response) {
  auto open = response.find("```");
  if (open == std::string::npos) return response;
  auto body_start = response.find('\n', open);
  if (body_start == std::string::npos) return response;
  ++body_start;
  auto close = response.find("```", body_start);
  if (close == std::string::npos) return response.substr(body_start);
  return response.substr(body_start, close - body_start);
}

}  // namespace kgfuzz
