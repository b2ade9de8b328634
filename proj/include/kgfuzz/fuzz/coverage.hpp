#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kgfuzz/common/io.hpp"
#include "kgfuzz/graph/knowledge_graph.hpp"

namespace kgfuzz {

inline constexpr int kCoverageSchemaVersion = 1;

struct FileCoverage {
  std::uint64_t covered = 0;
  std::uint64_t total = 0;
  bool operator==(const FileCoverage&) const = default;
};

struct CoverageReport {
  std::map<std::string, FileCoverage> per_file;  // repo-relative path -> branch counts
  std::uint64_t timestamp = 0;                   // logical clock, not wall time
  bool operator==(const CoverageReport&) const = default;

  std::uint64_t covered() const noexcept;
  std::uint64_t total() const noexcept;
};

/// Throws Error(ParseFailure) when covered > total for some file.
void validate_report(const CoverageReport& report);

json to_json(const CoverageReport& report);
CoverageReport coverage_from_json(const json& j);

/// Reduces an `llvm-cov export` JSON document to per-file branch counts. Paths under `root`
/// are made relative to it; files outside `root` are dropped.
CoverageReport coverage_from_llvm_export(const json& j, const std::filesystem::path& root);

struct LowCoverage {
  std::vector<std::string> files;  // ratio strictly below the overall ratio, by path
  std::vector<std::string> apis;   // APIs defined in those files, by (file ratio, name)
};

/// Strict `<` comparison against the overall ratio using exact integer arithmetic.
/// Files with zero branches are ignored. Errors: EmptyReport when the overall total is 0.
LowCoverage analyze_file_coverage(const CoverageReport& report, const CodeKnowledgeGraph& graph);

/// True iff some file's covered count strictly increased. Errors: FileUniverseMismatch.
bool detect_new_path(const CoverageReport& before, const CoverageReport& after);

/// Per-file maximum of both reports (covered and total), timestamp = max.
CoverageReport merge_max(const CoverageReport& a, const CoverageReport& b);

/// `report` restricted to the files of `universe`; files it lacks get 0 covered and the
/// universe's total.
CoverageReport project_onto(const CoverageReport& report, const CoverageReport& universe);

}  // namespace kgfuzz
