#include "kgfuzz/source/source_model.hpp"

namespace kgfuzz {

json to_json(const SourceModel& model) {
  json fns = json::array();
  for (const auto& f : model.functions) {
    fns.push_back({{"name", f.name},
                   {"signature", f.signature},
                   {"file_path", f.file_path},
                   {"source_text", f.source_text},
                   {"line_span", {f.line_span.start, f.line_span.end}},
                   {"is_file_local", f.is_file_local}});
  }
  json calls = json::array();
  for (const auto& c : model.calls) {
    calls.push_back({{"caller", c.caller},
                     {"caller_file", c.caller_file},
                     {"callee", c.callee},
                     {"callee_file", c.callee_file},
                     {"kind", c.kind == CallKind::Internal ? "Internal" : "External"}});
  }
  json apis = json::array();
  for (const auto& a : model.api_list) {
    apis.push_back({{"name", a.name}, {"header", a.header}, {"signature", a.signature}});
  }
  return {{"functions", fns},
          {"files", model.files},
          {"calls", calls},
          {"api_list", apis},
          {"function_like_macros", model.function_like_macros}};
}

SourceModel source_model_from_json(const json& j) {
  SourceModel m;
  for (const auto& f : j.at("functions")) {
    SourceFunction fn;
    fn.name = f.at("name");
    fn.signature = f.at("signature");
    fn.file_path = f.at("file_path");
    fn.source_text = f.at("source_text");
    fn.line_span = {f.at("line_span").at(0), f.at("line_span").at(1)};
    fn.is_file_local = f.at("is_file_local");
    m.functions.push_back(std::move(fn));
  }
  m.files = j.at("files").get<std::vector<std::string>>();
  for (const auto& c : j.at("calls")) {
    m.calls.push_back({c.at("caller"), c.at("caller_file"), c.at("callee"), c.at("callee_file"),
                       c.at("kind") == "Internal" ? CallKind::Internal : CallKind::External});
  }
  for (const auto& a : j.at("api_list")) m.api_list.push_back({a.at("name"), a.at("header"), a.at("signature")});
  m.function_like_macros = j.value("function_like_macros", std::vector<std::string>{});
  return m;
}

}  // namespace kgfuzz
