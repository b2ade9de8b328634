#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kgfuzz/common/io.hpp"

namespace kgfuzz {

struct LineSpan {
  int start = 0;
  int end = 0;
  bool operator==(const LineSpan&) const = default;
};

struct SourceFunction {
  std::string name;
  std::string signature;   // "ret name(param-types)", parameter names stripped
  std::string file_path;   // repo-relative, '/'-separated
  std::string source_text;
  LineSpan line_span;
  bool is_file_local = false;

  bool operator==(const SourceFunction&) const = default;
};

enum class CallKind { Internal, External };

/// One direct call. `callee_file` is set for Internal edges and names the file of the
/// resolved definition; `caller_file` disambiguates same-named functions.
struct CallEdgeRaw {
  std::string caller;
  std::string caller_file;
  std::string callee;
  std::string callee_file;
  CallKind kind = CallKind::External;

  auto operator<=>(const CallEdgeRaw&) const = default;
};

struct ApiSpec {
  std::string name;
  std::string header;
  std::string signature;
  bool operator==(const ApiSpec&) const = default;
};

struct SourceModel {
  std::vector<SourceFunction> functions;  // sorted by (file_path, line_span.start)
  std::vector<std::string> files;         // sorted
  std::vector<CallEdgeRaw> calls;         // sorted, distinct
  std::vector<ApiSpec> api_list;
  std::vector<std::string> function_like_macros;  // excluded from call extraction
  std::vector<std::string> warnings;

  bool operator==(const SourceModel&) const = default;
};

json to_json(const SourceModel& model);
SourceModel source_model_from_json(const json& j);

}  // namespace kgfuzz
