#include "kgfuzz/graph/knowledge_graph.hpp"

#include <algorithm>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/hash.hpp"
#include "kgfuzz/common/parallel.hpp"
#include "kgfuzz/graph/summarizer.hpp"

namespace kgfuzz {

std::string_view to_string(EdgeLabel label) noexcept {
  switch (label) {
    case EdgeLabel::Calls: return "CALLS";
    case EdgeLabel::Contains: return "CONTAINS";
    case EdgeLabel::LibraryCalls: return "LIBRARY_CALLS";
  }
  return "?";
}

std::string function_node_id(std::string_view name, std::string_view file_path) {
  std::string key(name);
  key += '\n';
  key += file_path;
  return short_id("fn:", key);
}

std::string file_node_id(std::string_view path) { return "file:" + std::string(path); }
std::string external_node_id(std::string_view name) { return "ext:" + std::string(name); }

const FunctionNode* CodeKnowledgeGraph::function(const std::string& id) const {
  auto it = nodes.find(id);
  return it == nodes.end() ? nullptr : std::get_if<FunctionNode>(&it->second);
}

const FileNode* CodeKnowledgeGraph::file(const std::string& id) const {
  auto it = nodes.find(id);
  return it == nodes.end() ? nullptr : std::get_if<FileNode>(&it->second);
}

const FunctionNode* CodeKnowledgeGraph::api_node(std::string_view api_name) const {
  for (const auto& [id, node] : nodes) {
    const auto* fn = std::get_if<FunctionNode>(&node);
    if (fn && fn->is_library_api && fn->name == api_name) return fn;
  }
  return nullptr;
}

const FunctionNode* CodeKnowledgeGraph::function_by_name(std::string_view name, std::string_view file_hint) const {
  const FunctionNode* first = nullptr;
  for (const auto& [id, node] : nodes) {
    const auto* fn = std::get_if<FunctionNode>(&node);
    if (!fn || fn->name != name) continue;
    if (!file_hint.empty() && fn->file_path == file_hint) return fn;
    if (!first || (fn->is_library_api && !first->is_library_api)) first = fn;
  }
  return first;
}

std::vector<const FunctionNode*> CodeKnowledgeGraph::function_nodes() const {
  std::vector<const FunctionNode*> out;
  for (const auto& [id, node] : nodes) {
    if (const auto* fn = std::get_if<FunctionNode>(&node)) out.push_back(fn);
  }
  return out;
}

std::vector<const FileNode*> CodeKnowledgeGraph::file_nodes() const {
  std::vector<const FileNode*> out;
  for (const auto& [id, node] : nodes) {
    if (const auto* f = std::get_if<FileNode>(&node)) out.push_back(f);
  }
  return out;
}

std::size_t CodeKnowledgeGraph::count_edges(EdgeLabel label) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [&](const GraphEdge& e) { return e.label == label; }));
}

bool CodeKnowledgeGraph::is_known_api(std::string_view name) const { return api_spec(name) != nullptr; }

const ApiSpec* CodeKnowledgeGraph::api_spec(std::string_view name) const {
  for (const auto& a : apis) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

CodeKnowledgeGraph build_graph(const SourceModel& model, Summarizer& summarizer, std::size_t workers,
                               std::vector<std::string>* warnings) {
  CodeKnowledgeGraph g;
  g.apis = model.api_list;

  const std::size_t nf = model.functions.size();
  const std::size_t nd = model.files.size();
  std::vector<std::string> fn_summaries(nf);
  std::vector<std::string> file_summaries(nd);
  std::vector<std::string> failures(nf + nd);

  std::vector<std::vector<const SourceFunction*>> per_file(nd);
  for (const auto& fn : model.functions) {
    auto it = std::lower_bound(model.files.begin(), model.files.end(), fn.file_path);
    if (it != model.files.end() && *it == fn.file_path) {
      per_file[static_cast<std::size_t>(it - model.files.begin())].push_back(&fn);
    }
  }

  parallel_for(nf + nd, workers, [&](std::size_t i) {
    try {
      if (i < nf) fn_summaries[i] = summarizer.summarize_function(model.functions[i]);
      else file_summaries[i - nf] = summarizer.summarize_file(model.files[i - nf], per_file[i - nf]);
    } catch (const std::exception& e) {
      const std::string node = i < nf ? function_node_id(model.functions[i].name, model.functions[i].file_path)
                                      : file_node_id(model.files[i - nf]);
      failures[i] = std::string(to_string(Errc::SummarizerFailure)) + "(" + node + "): " + e.what();
    }
  });
  if (warnings) {
    for (auto& f : failures) {
      if (!f.empty()) warnings->push_back(std::move(f));
    }
  }

  for (std::size_t d = 0; d < nd; ++d) {
    const auto id = file_node_id(model.files[d]);
    g.nodes.emplace(id, FileNode{id, model.files[d], file_summaries[d]});
  }

  // Each API flags exactly one definition: the externally visible one when names collide.
  std::map<std::string, const SourceFunction*> api_defs;
  for (const auto& api : model.api_list) {
    for (const auto& fn : model.functions) {
      if (fn.name != api.name) continue;
      auto& slot = api_defs[api.name];
      if (!slot || (slot->is_file_local && !fn.is_file_local)) slot = &fn;
    }
  }

  for (std::size_t i = 0; i < nf; ++i) {
    const auto& fn = model.functions[i];
    FunctionNode node;
    node.id = function_node_id(fn.name, fn.file_path);
    node.name = fn.name;
    node.signature = fn.signature;
    node.file_path = fn.file_path;
    node.source_code = fn.source_text;
    node.summary = fn_summaries[i];
    node.line_span = fn.line_span;
    auto api = api_defs.find(fn.name);
    if (api != api_defs.end() && api->second == &fn) {
      node.is_library_api = true;
      node.header = g.api_spec(fn.name)->header;
    }
    const std::string parent = file_node_id(fn.file_path);
    if (!g.nodes.count(parent)) throw Error(Errc::DanglingEdge, parent + " -> " + node.id);
    g.edges.insert({parent, node.id, EdgeLabel::Contains});
    g.nodes.emplace(node.id, std::move(node));
  }

  for (const auto& call : model.calls) {
    const std::string src = function_node_id(call.caller, call.caller_file);
    if (!g.nodes.count(src)) throw Error(Errc::DanglingEdge, src + " (" + call.caller + ")");
    if (call.kind == CallKind::Internal) {
      const std::string dst = function_node_id(call.callee, call.callee_file);
      if (!g.nodes.count(dst)) throw Error(Errc::DanglingEdge, dst + " (" + call.callee + ")");
      g.edges.insert({src, dst, EdgeLabel::Calls});
    } else {
      const std::string dst = external_node_id(call.callee);
      g.nodes.try_emplace(dst, ExternalFunctionNode{dst, call.callee});
      g.edges.insert({src, dst, EdgeLabel::LibraryCalls});
    }
  }
  return g;
}

void validate_graph(const CodeKnowledgeGraph& g) {
  std::map<std::string, int> parents;
  for (const auto& e : g.edges) {
    auto s = g.nodes.find(e.src);
    auto d = g.nodes.find(e.dst);
    if (s == g.nodes.end() || d == g.nodes.end()) {
      throw Error(Errc::DanglingEdge, e.src + " -> " + e.dst);
    }
    const bool ok = [&] {
      switch (e.label) {
        case EdgeLabel::Contains:
          return std::holds_alternative<FileNode>(s->second) && std::holds_alternative<FunctionNode>(d->second) &&
                 std::get<FileNode>(s->second).path == std::get<FunctionNode>(d->second).file_path;
        case EdgeLabel::Calls:
          return std::holds_alternative<FunctionNode>(s->second) && std::holds_alternative<FunctionNode>(d->second);
        case EdgeLabel::LibraryCalls:
          return std::holds_alternative<FunctionNode>(s->second) &&
                 std::holds_alternative<ExternalFunctionNode>(d->second);
      }
      return false;
    }();
    if (!ok) throw Error(Errc::DanglingEdge, "ill-typed " + std::string(to_string(e.label)) + " edge " + e.src + " -> " + e.dst);
    if (e.label == EdgeLabel::Contains) ++parents[e.dst];
  }
  for (const auto* fn : g.function_nodes()) {
    if (parents[fn->id] != 1) throw Error(Errc::DanglingEdge, fn->id + " has " + std::to_string(parents[fn->id]) + " CONTAINS parents");
  }
}

json to_json(const CodeKnowledgeGraph& g) {
  json nodes = json::array();
  for (const auto& [id, node] : g.nodes) {
    if (const auto* fn = std::get_if<FunctionNode>(&node)) {
      nodes.push_back({{"id", fn->id},
                       {"kind", "function"},
                       {"name", fn->name},
                       {"signature", fn->signature},
                       {"file_path", fn->file_path},
                       {"source_code", fn->source_code},
                       {"summary", fn->summary},
                       {"is_library_api", fn->is_library_api},
                       {"header", fn->header},
                       {"line_span", {fn->line_span.start, fn->line_span.end}}});
    } else if (const auto* f = std::get_if<FileNode>(&node)) {
      nodes.push_back({{"id", f->id}, {"kind", "file"}, {"path", f->path}, {"summary", f->summary}});
    } else {
      const auto& x = std::get<ExternalFunctionNode>(node);
      nodes.push_back({{"id", x.id}, {"kind", "external"}, {"name", x.name}, {"label", "LIBRARY_FUNCTION"}});
    }
  }
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({{"src", e.src}, {"dst", e.dst}, {"label", to_string(e.label)}});
  json apis = json::array();
  for (const auto& a : g.apis) apis.push_back({{"name", a.name}, {"header", a.header}, {"signature", a.signature}});
  return {{"schema_version", kGraphSchemaVersion}, {"nodes", nodes}, {"edges", edges}, {"apis", apis}};
}

CodeKnowledgeGraph graph_from_json(const json& j) {
  if (j.value("schema_version", -1) != kGraphSchemaVersion) {
    throw Error(Errc::SchemaVersionMismatch, "graph schema_version " + j.value("schema_version", json(-1)).dump() +
                                                 ", expected " + std::to_string(kGraphSchemaVersion));
  }
  CodeKnowledgeGraph g;
  try {
    for (const auto& n : j.at("nodes")) {
      const std::string kind = n.at("kind");
      const std::string id = n.at("id");
      if (kind == "function") {
        FunctionNode fn{id,
                        n.at("name"),
                        n.at("signature"),
                        n.at("file_path"),
                        n.at("source_code"),
                        n.at("summary"),
                        n.at("is_library_api"),
                        n.value("header", std::string{}),
                        {n.at("line_span").at(0), n.at("line_span").at(1)}};
        g.nodes.emplace(id, std::move(fn));
      } else if (kind == "file") {
        g.nodes.emplace(id, FileNode{id, n.at("path"), n.at("summary")});
      } else if (kind == "external") {
        g.nodes.emplace(id, ExternalFunctionNode{id, n.at("name")});
      } else {
        throw Error(Errc::IoError, "unknown node kind " + kind);
      }
    }
    for (const auto& e : j.at("edges")) {
      const std::string label = e.at("label");
      EdgeLabel l = label == "CALLS"      ? EdgeLabel::Calls
                    : label == "CONTAINS" ? EdgeLabel::Contains
                    : label == "LIBRARY_CALLS"
                        ? EdgeLabel::LibraryCalls
                        : throw Error(Errc::IoError, "unknown edge label " + label);
      g.edges.insert({e.at("src"), e.at("dst"), l});
    }
    for (const auto& a : j.value("apis", json::array())) g.apis.push_back({a.at("name"), a.at("header"), a.at("signature")});
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, std::string("malformed graph: ") + e.what());
  }
  return g;
}

void save_graph(const CodeKnowledgeGraph& graph, const std::filesystem::path& path) {
  write_json_file(path, to_json(graph));
}

CodeKnowledgeGraph load_graph(const std::filesystem::path& path) { return graph_from_json(read_json_file(path)); }

}  // namespace kgfuzz
