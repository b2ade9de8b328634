#include <doctest.h>

#include <mutex>
#include <set>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/graph/knowledge_graph.hpp"
#include "kgfuzz/graph/summarizer.hpp"
#include "kgfuzz/llm/prompts.hpp"
#include "kgfuzz/source/source_analyzer.hpp"
#include "repo_gen.hpp"
#include "support.hpp"

using namespace kgfuzz;

namespace {

class CountingSummarizer final : public Summarizer {
 public:
  std::string summarize_function(const SourceFunction& fn) override {
    std::lock_guard lock(mu);
    ++fn_calls;
    if (fn.name == fail_on) throw std::runtime_error("boom");
    return "summary of " + fn.name;
  }
  std::string summarize_file(const std::string& path, const std::vector<const SourceFunction*>&) override {
    std::lock_guard lock(mu);
    ++file_calls;
    return "file " + path;
  }
  std::mutex mu;
  int fn_calls = 0;
  int file_calls = 0;
  std::string fail_on;
};

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("node and edge counts follow the generated truth") {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
      testing::TempDir dir;
      const auto t = testing::generate_repo(dir.path(), seed, 1 + seed % 4);
      NullSummarizer s;
      const auto g = build_graph(parse_repository(dir.path(), {}), s);
      CAPTURE(seed);
      CHECK(g.nodes.size() == t.functions + t.files + t.external_callees.size());
      CHECK(g.count_edges(EdgeLabel::Contains) == t.functions);
      CHECK(g.count_edges(EdgeLabel::Calls) == t.internal_calls.size());
      CHECK(g.count_edges(EdgeLabel::LibraryCalls) == t.external_calls.size());
      validate_graph(g);
    }
  }

  TEST_CASE("summaries, api flags and failure warnings") {
    testing::TempDir dir;
    testing::write_file(dir / "lib.c", "static int h(int x) { return x; }\nint api(int x) { return h(x) + puts(\"\"); }\n");
    auto m = parse_repository(dir.path(), {});
    m.api_list = {{"api", "lib.h", "int api(int)"}};
    CountingSummarizer s;
    s.fail_on = "h";
    std::vector<std::string> warnings;
    const auto g = build_graph(m, s, 2, &warnings);
    CHECK(s.fn_calls == 2);
    CHECK(s.file_calls == 1);
    REQUIRE(warnings.size() == 1);
    const auto* api = g.api_node("api");
    REQUIRE(api != nullptr);
    CHECK(api->is_library_api);
    CHECK(api->header == "lib.h");
    CHECK(api->summary == "summary of api");
    CHECK(g.function_by_name("h")->summary.empty());
    CHECK(g.is_known_api("api"));
    CHECK_FALSE(g.is_known_api("h"));
  }

  TEST_CASE("json round trip and version check") {
    testing::TempDir dir;
    testing::generate_repo(dir.path(), 5);
    NullSummarizer s;
    const auto g = build_graph(parse_repository(dir.path(), {}), s);
    save_graph(g, dir / "g.json");
    CHECK(load_graph(dir / "g.json") == g);
    auto j = to_json(g);
    j["schema_version"] = 99;
    CHECK_THROWS_AS(graph_from_json(j), Error);
  }

  TEST_CASE("validate_graph rejects dangling edges") {
    CodeKnowledgeGraph g;
    g.nodes.emplace(file_node_id("a.c"), FileNode{file_node_id("a.c"), "a.c", ""});
    g.edges.insert({file_node_id("a.c"), function_node_id("f", "a.c"), EdgeLabel::Contains});
    CHECK_THROWS_AS(validate_graph(g), Error);
  }

  TEST_CASE("llm summarizer uses the chat role") {
    std::vector<LlmRole> roles;
    auto gw = testing::scripted_gateway([&](const ChatRequest& r) {
      roles.push_back(r.role);
      return std::string("It does things.");
    });
    PromptTemplates prompts;
    LlmSummarizer s(*gw, prompts);
    SourceFunction fn{"f", "int f(void)", "a.c", "int f(void) { return 0; }", {1, 1}, false};
    CHECK(s.summarize_function(fn) == "It does things.");
    REQUIRE(roles.size() == 1);
    CHECK(roles[0] == LlmRole::Chat);
  }
}
