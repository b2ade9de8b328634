#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "kgfuzz/combiner/api_combiner.hpp"
#include "kgfuzz/common/error.hpp"
#include "kgfuzz/index/embedder.hpp"
#include "kgfuzz/llm/prompts.hpp"
#include "support.hpp"

using namespace kgfuzz;

namespace {

std::string task_of(const ChatRequest& r) {
  const auto& sys = r.messages.front().text;
  const auto at = sys.find("[task: ");
  if (at == std::string::npos) return "";
  return sys.substr(at + 7, sys.find(']', at) - at - 7);
}

std::vector<std::string> toy_apis() {
  return {"tl_buf_new", "tl_buf_free", "tl_buf_append", "tl_checksum", "tl_parse_kv", "tl_parse_free"};
}

struct Fixture {
  CodeKnowledgeGraph graph = testing::toylib_graph();
  HashEmbedder embedder{64};
  PromptTemplates prompts;
  std::pair<PropertyGraphIndex, PropertyGraphIndex> idx = build_indexes(graph, embedder);
};

}  // namespace

TEST_SUITE("combiner") {
  TEST_CASE("parse_api_lines is lenient but only keeps known names") {
    const auto known = toy_apis();
    const std::string answer =
        "Here are the APIs:\n- `tl_buf_new`: creates\n2. tl_buf_append(buf, d, n)\n* tl_unknown\n"
        "  tl_buf_new again\n1) tl_checksum\ntl_parse_kvx\n";
    CHECK(parse_api_lines(answer, known) == std::vector<std::string>{"tl_buf_new", "tl_buf_append", "tl_checksum"});
    CHECK(parse_api_lines("", known).empty());
  }

  TEST_CASE("finalize_combination contract holds for random lists") {
    std::mt19937_64 rng(3);
    const auto known = toy_apis();
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<std::string> parsed;
      std::set<std::string> seen;
      const std::size_t n = rng() % 7;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& a = known[rng() % known.size()];
        if (seen.insert(a).second) parsed.push_back(a);
      }
      const auto target = known[rng() % known.size()];
      const std::size_t max_len = 1 + rng() % 6;
      const auto c = finalize_combination(target, parsed, max_len, 2);
      CHECK(c.target_api == target);
      CHECK(c.generation == 2);
      CHECK(c.apis.size() <= max_len);
      CHECK(std::find(c.apis.begin(), c.apis.end(), target) != c.apis.end());
      CHECK(std::set<std::string>(c.apis.begin(), c.apis.end()).size() == c.apis.size());
      std::vector<std::string> want = parsed;
      const auto pos = std::find(want.begin(), want.end(), target);
      if (pos == want.end() || static_cast<std::size_t>(pos - want.begin()) >= max_len) {
        if (pos != want.end()) want.erase(pos);
        want.insert(want.begin(), target);
      }
      if (want.size() > max_len) want.resize(max_len);
      CHECK(c.apis == want);
    }
  }

  TEST_CASE("refinement folds every chunk and survives LLM failures") {
    int calls = 0;
    auto gw = testing::scripted_gateway([&](const ChatRequest& r) -> std::string {
      if (++calls == 2) throw ProviderError("down", false);
      return r.messages.back().text.substr(0, 0) + "R" + std::to_string(calls);
    });
    RefinementState st;
    st.response_so_far = "R0";
    st.refine_system = "[task: combine_refine]";
    st.refine_prompt = "prev={{response}} chunk={{chunk}}";
    st = refine_response(st, {"c1", "n", ChunkKind::NL, "one"}, *gw);
    CHECK(st.response_so_far == "R1");
    st = refine_response(st, {"c2", "n", ChunkKind::NL, "two"}, *gw);
    CHECK(st.response_so_far == "R1");
    CHECK(st.consumed_chunks == 2);
    CHECK(st.warnings.size() == 1);
  }

  TEST_CASE("query_combination makes 1 + (chunks - 1) + 1 calls in retrieval order") {
    Fixture f;
    CombinerSettings cs;
    cs.retrieval = {0.0, 4};
    const auto& target = *f.graph.api_spec("tl_parse_kv");
    const auto chunks = retrieve_for_target(target, f.graph, f.idx.first, f.idx.second, cs.retrieval, f.embedder);
    REQUIRE(chunks.size() == 4);
    std::vector<std::string> tasks;
    std::vector<std::string> seen_chunks;
    auto gw = testing::scripted_gateway([&](const ChatRequest& r) {
      tasks.push_back(task_of(r));
      seen_chunks.push_back(r.messages.back().text);
      return std::string("- tl_parse_free\n- tl_buf_new\n");
    });
    const auto c = query_combination(target, f.graph, f.idx.first, f.idx.second, cs, f.embedder, *gw, f.prompts);
    CHECK(tasks == std::vector<std::string>{"combine_initial", "combine_refine", "combine_refine", "combine_refine",
                                            "combine_final"});
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      CHECK(seen_chunks[i].find(chunks[i].chunk.text) != std::string::npos);
    }
    CHECK(c.apis == std::vector<std::string>{"tl_parse_kv", "tl_parse_free", "tl_buf_new"});
    CHECK(c.generation == 0);
  }

  TEST_CASE("empty synthesis is retried once then rejected") {
    Fixture f;
    int finals = 0;
    auto gw = testing::scripted_gateway([&](const ChatRequest& r) {
      const auto t = task_of(r);
      if (t == "combine_final") ++finals;
      return std::string("nothing useful");
    });
    try {
      query_combination(*f.graph.api_spec("tl_buf_new"), f.graph, f.idx.first, f.idx.second, {}, f.embedder, *gw,
                        f.prompts);
      FAIL("expected EmptyCombination");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::EmptyCombination);
    }
    CHECK(finals == 2);
  }

  TEST_CASE("single-API library needs no LLM call") {
    auto graph = testing::toylib_graph();
    graph.apis.resize(1);
    HashEmbedder e;
    PromptTemplates prompts;
    auto [nl, code] = build_indexes(graph, e);
    auto gw = testing::scripted_gateway([](const ChatRequest&) -> std::string { throw ProviderError("no", false); });
    const auto c = query_combination(graph.apis[0], graph, nl, code, {}, e, *gw, prompts);
    CHECK(c.apis == std::vector<std::string>{graph.apis[0].name});
  }

  TEST_CASE("random model outputs never exceed the length limit") {
    Fixture f;
    std::mt19937_64 rng(99);
    const auto known = toy_apis();
    for (int trial = 0; trial < 40; ++trial) {
      auto gw = testing::scripted_gateway([&](const ChatRequest&) {
        std::string out;
        const std::size_t n = 1 + rng() % 12;
        for (std::size_t i = 0; i < n; ++i) out += "- " + known[rng() % known.size()] + "\n";
        return out;
      });
      const auto& target = f.graph.apis[rng() % f.graph.apis.size()];
      const auto c = query_combination(target, f.graph, f.idx.first, f.idx.second, {}, f.embedder, *gw, f.prompts);
      CHECK(c.apis.size() <= kDefaultMaxCombinationLen);
      CHECK(std::find(c.apis.begin(), c.apis.end(), target.name) != c.apis.end());
    }
  }

  TEST_CASE("combination json round trip") {
    ApiCombination c{"a", {"a", "b"}, 3};
    CHECK(combination_from_json(to_json(c)) == c);
    CHECK(combination_manifest({c}).size() == 1);
  }
}
