#include "kgfuzz/common/error.hpp"

namespace kgfuzz {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::RootNotFound: return "RootNotFound";
    case Errc::NoSourceFiles: return "NoSourceFiles";
    case Errc::DuplicateApi: return "DuplicateApi";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::SummarizerFailure: return "SummarizerFailure";
    case Errc::DanglingEdge: return "DanglingEdge";
    case Errc::IoError: return "IoError";
    case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::IndexEmpty: return "IndexEmpty";
    case Errc::EmbedderFailure: return "EmbedderFailure";
    case Errc::FingerprintMismatch: return "FingerprintMismatch";
    case Errc::EmptyCombination: return "EmptyCombination";
    case Errc::LlmFailure: return "LlmFailure";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::MissingApiNode: return "MissingApiNode";
    case Errc::StructuralCheckFailed: return "StructuralCheckFailed";
    case Errc::NoErrors: return "NoErrors";
    case Errc::CompilerUnavailable: return "CompilerUnavailable";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::EmptyReport: return "EmptyReport";
    case Errc::FileUniverseMismatch: return "FileUniverseMismatch";
    case Errc::UnparseableReport: return "UnparseableReport";
    case Errc::EmptyKb: return "EmptyKb";
    case Errc::MissingArtifact: return "MissingArtifact";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(Errc code, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace kgfuzz
