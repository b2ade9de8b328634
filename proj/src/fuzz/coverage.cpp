#include "kgfuzz/fuzz/coverage.hpp"

#include <algorithm>

#include "kgfuzz/common/error.hpp"

namespace kgfuzz {

std::uint64_t CoverageReport::covered() const noexcept {
  std::uint64_t s = 0;
  for (const auto& [p, c] : per_file) s += c.covered;
  return s;
}

std::uint64_t CoverageReport::total() const noexcept {
  std::uint64_t s = 0;
  for (const auto& [p, c] : per_file) s += c.total;
  return s;
}

void validate_report(const CoverageReport& report) {
  for (const auto& [path, c] : report.per_file) {
    if (c.covered > c.total) {
      throw Error(Errc::ParseFailure, path + ": covered " + std::to_string(c.covered) + " > total " + std::to_string(c.total));
    }
  }
}

json to_json(const CoverageReport& report) {
  json files = json::object();
  for (const auto& [path, c] : report.per_file) files[path] = {{"covered", c.covered}, {"total", c.total}};
  return {{"schema_version", kCoverageSchemaVersion}, {"timestamp", report.timestamp}, {"per_file", files}};
}

CoverageReport coverage_from_json(const json& j) {
  if (j.value("schema_version", 0) != kCoverageSchemaVersion) {
    throw Error(Errc::SchemaVersionMismatch, "coverage report schema_version must be 1");
  }
  CoverageReport r;
  r.timestamp = j.value("timestamp", std::uint64_t{0});
  for (const auto& [path, c] : j.at("per_file").items()) {
    r.per_file[path] = {c.at("covered").get<std::uint64_t>(), c.at("total").get<std::uint64_t>()};
  }
  validate_report(r);
  return r;
}

CoverageReport coverage_from_llvm_export(const json& j, const std::filesystem::path& root) {
  CoverageReport r;
  const std::string prefix = root.lexically_normal().generic_string();
  for (const auto& data : j.at("data")) {
    for (const auto& f : data.value("files", json::array())) {
      std::string name = std::filesystem::path(f.at("filename").get<std::string>()).lexically_normal().generic_string();
      if (!prefix.empty()) {
        std::string p = prefix.ends_with('/') ? prefix : prefix + "/";
        if (!name.starts_with(p)) continue;
        name = name.substr(p.size());
      }
      const auto& b = f.at("summary").at("branches");
      auto& slot = r.per_file[name];
      slot.covered += b.at("covered").get<std::uint64_t>();
      slot.total += b.at("count").get<std::uint64_t>();
    }
  }
  validate_report(r);
  return r;
}

namespace {

// a_c/a_t < b_c/b_t with positive denominators.
bool ratio_less(std::uint64_t ac, std::uint64_t at, std::uint64_t bc, std::uint64_t bt) {
  return static_cast<unsigned __int128>(ac) * bt < static_cast<unsigned __int128>(bc) * at;
}

}  // namespace

LowCoverage analyze_file_coverage(const CoverageReport& report, const CodeKnowledgeGraph& graph) {
  const std::uint64_t C = report.covered(), T = report.total();
  if (T == 0) throw Error(Errc::EmptyReport, "coverage report has no branches");
  LowCoverage out;
  for (const auto& [path, c] : report.per_file) {
    if (c.total > 0 && ratio_less(c.covered, c.total, C, T)) out.files.push_back(path);
  }
  struct Item {
    std::string api;
    FileCoverage cov;
  };
  std::vector<Item> items;
  for (const auto& spec : graph.apis) {
    const FunctionNode* node = graph.api_node(spec.name);
    if (!node) continue;
    if (!std::binary_search(out.files.begin(), out.files.end(), node->file_path)) continue;
    items.push_back({spec.name, report.per_file.at(node->file_path)});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (ratio_less(a.cov.covered, a.cov.total, b.cov.covered, b.cov.total)) return true;
    if (ratio_less(b.cov.covered, b.cov.total, a.cov.covered, a.cov.total)) return false;
    return a.api < b.api;
  });
  for (auto& it : items) out.apis.push_back(std::move(it.api));
  return out;
}

bool detect_new_path(const CoverageReport& before, const CoverageReport& after) {
  if (before.per_file.size() != after.per_file.size() ||
      !std::equal(before.per_file.begin(), before.per_file.end(), after.per_file.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; })) {
    throw Error(Errc::FileUniverseMismatch, "coverage reports cover different files");
  }
  for (const auto& [path, c] : after.per_file) {
    if (c.covered > before.per_file.at(path).covered) return true;
  }
  return false;
}

CoverageReport merge_max(const CoverageReport& a, const CoverageReport& b) {
  CoverageReport r = a;
  for (const auto& [path, c] : b.per_file) {
    auto& slot = r.per_file[path];
    slot.covered = std::max(slot.covered, c.covered);
    slot.total = std::max(slot.total, c.total);
  }
  r.timestamp = std::max(a.timestamp, b.timestamp);
  return r;
}

CoverageReport project_onto(const CoverageReport& report, const CoverageReport& universe) {
  CoverageReport r;
  r.timestamp = report.timestamp;
  for (const auto& [path, u] : universe.per_file) {
    auto it = report.per_file.find(path);
    r.per_file[path] = it == report.per_file.end() ? FileCoverage{0, u.total} : it->second;
  }
  return r;
}

}  // namespace kgfuzz
