#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "kgfuzz/fuzz/coverage.hpp"
#include "kgfuzz/graph/knowledge_graph.hpp"

namespace kgfuzz::testing {

/// Low-coverage files and APIs computed with long double ratios. With branch counts below
/// 2^20 distinct ratios differ far above long double rounding, and equal ratios round to
/// the same value, so the comparison is exact.
inline LowCoverage low_coverage_oracle(const CoverageReport& r, const CodeKnowledgeGraph& g) {
  long double cov = 0, tot = 0;
  for (const auto& [path, fc] : r.per_file) {
    cov += fc.covered;
    tot += fc.total;
  }
  const long double overall = cov / tot;
  LowCoverage out;
  std::vector<std::pair<long double, std::string>> ranked;
  for (const auto& [path, fc] : r.per_file) {
    if (fc.total == 0) continue;
    const long double ratio = static_cast<long double>(fc.covered) / fc.total;
    if (!(ratio < overall)) continue;
    out.files.push_back(path);
    for (const auto* fn : g.function_nodes()) {
      if (fn->is_library_api && fn->file_path == path) ranked.emplace_back(ratio, fn->name);
    }
  }
  std::sort(ranked.begin(), ranked.end());
  for (auto& [ratio, name] : ranked) out.apis.push_back(name);
  return out;
}

}  // namespace kgfuzz::testing
