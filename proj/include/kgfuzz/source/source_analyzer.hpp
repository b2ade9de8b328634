#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kgfuzz/source/source_model.hpp"

namespace kgfuzz {

/// Result of scanning one file's text.
struct ParsedFile {
  std::vector<SourceFunction> functions;
  std::vector<std::string> function_like_macros;
};

/// Finds top-level function definitions in C text. Throws Error(ParseFailure) on
/// lexical errors or unbalanced brackets.
ParsedFile parse_source_text(std::string_view file_path, std::string_view text);

/// Normalizes a parameter list "(int x, const char *s)" to "int, const char *".
std::string normalize_params(std::string_view params);

/// Walks `root` and parses every .c/.h file matching one of `include_globs`
/// (default: all .c/.h files). Fills functions, files and calls; api_list stays empty.
/// Errors: RootNotFound; NoSourceFiles when C files exist but none match the globs.
SourceModel parse_repository(const std::filesystem::path& root,
                             const std::vector<std::string>& include_globs);

/// Direct-call edges of every function in `model`. Appends omission notes to `warnings`
/// when non-null.
std::vector<CallEdgeRaw> extract_calls(const SourceModel& model,
                                       std::vector<std::string>* warnings = nullptr);

/// Tab-separated `name<TAB>header<TAB>signature` lines; '#' lines and blank lines skipped.
std::vector<ApiSpec> load_api_list(const std::filesystem::path& path);
std::vector<ApiSpec> parse_api_list(std::string_view content);

}  // namespace kgfuzz
