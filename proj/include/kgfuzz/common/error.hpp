#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kgfuzz {

enum class Errc {
  RootNotFound,
  NoSourceFiles,
  DuplicateApi,
  MalformedLine,
  SummarizerFailure,
  DanglingEdge,
  IoError,
  SchemaVersionMismatch,
  IndexEmpty,
  EmbedderFailure,
  FingerprintMismatch,
  EmptyCombination,
  LlmFailure,
  BudgetExceeded,
  MissingApiNode,
  StructuralCheckFailed,
  NoErrors,
  CompilerUnavailable,
  ParseFailure,
  EmptyReport,
  FileUniverseMismatch,
  UnparseableReport,
  EmptyKb,
  MissingArtifact,
  ConfigError,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

// LLM-side failures that best-effort stages absorb.
inline bool is_llm_error(const Error& e) noexcept {
  return e.code() == Errc::LlmFailure || e.code() == Errc::BudgetExceeded;
}

}  // namespace kgfuzz
