#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "kgfuzz/common/io.hpp"
#include "kgfuzz/source/source_model.hpp"

namespace kgfuzz {

class Summarizer;

inline constexpr int kGraphSchemaVersion = 1;

struct FunctionNode {
  std::string id;
  std::string name;
  std::string signature;
  std::string file_path;
  std::string source_code;
  std::string summary;
  bool is_library_api = false;
  std::string header;  // from the API list; empty for internal functions
  LineSpan line_span;

  bool operator==(const FunctionNode&) const = default;
};

struct FileNode {
  std::string id;
  std::string path;
  std::string summary;
  bool operator==(const FileNode&) const = default;
};

/// Callee without a definition in the repository (label LIBRARY_FUNCTION).
struct ExternalFunctionNode {
  std::string id;
  std::string name;
  bool operator==(const ExternalFunctionNode&) const = default;
};

using GraphNode = std::variant<FunctionNode, FileNode, ExternalFunctionNode>;

// Declared in label-string order so edge sorting matches the serialized order.
enum class EdgeLabel { Calls, Contains, LibraryCalls };

std::string_view to_string(EdgeLabel label) noexcept;

struct GraphEdge {
  std::string src;
  std::string dst;
  EdgeLabel label;
  auto operator<=>(const GraphEdge&) const = default;
};

struct CodeKnowledgeGraph {
  std::map<std::string, GraphNode> nodes;
  std::set<GraphEdge> edges;
  std::vector<ApiSpec> apis;

  bool operator==(const CodeKnowledgeGraph&) const = default;

  const FunctionNode* function(const std::string& id) const;
  const FileNode* file(const std::string& id) const;

  /// Function node for a library API by name (the flagged definition), or nullptr.
  const FunctionNode* api_node(std::string_view api_name) const;
  /// Any function node with `name`; prefers the one in `file_hint` when given.
  const FunctionNode* function_by_name(std::string_view name, std::string_view file_hint = {}) const;

  std::vector<const FunctionNode*> function_nodes() const;
  std::vector<const FileNode*> file_nodes() const;
  std::size_t count_edges(EdgeLabel label) const;
  bool is_known_api(std::string_view name) const;
  const ApiSpec* api_spec(std::string_view name) const;
};

std::string function_node_id(std::string_view name, std::string_view file_path);
std::string file_node_id(std::string_view path);
std::string external_node_id(std::string_view name);

/// Builds G from the source model. The summarizer is called once per function and once
/// per file, on up to `workers` threads; a throwing summarizer leaves that summary empty
/// and appends a warning. Throws Error(DanglingEdge) if an edge endpoint is missing.
CodeKnowledgeGraph build_graph(const SourceModel& model, Summarizer& summarizer, std::size_t workers = 1,
                               std::vector<std::string>* warnings = nullptr);

/// Checks edge endpoint kinds and the single-CONTAINS-parent rule.
void validate_graph(const CodeKnowledgeGraph& graph);

json to_json(const CodeKnowledgeGraph& graph);
CodeKnowledgeGraph graph_from_json(const json& j);
void save_graph(const CodeKnowledgeGraph& graph, const std::filesystem::path& path);
CodeKnowledgeGraph load_graph(const std::filesystem::path& path);

}  // namespace kgfuzz
