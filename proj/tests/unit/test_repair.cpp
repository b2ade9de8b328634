#include <doctest.h>

#include <random>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/driver/driver_factory.hpp"
#include "kgfuzz/llm/prompts.hpp"
#include "kgfuzz/repair/repair_engine.hpp"
#include "support.hpp"

using namespace kgfuzz;

namespace {

FuzzDriver sample_driver(const std::string& source = "int LLVMFuzzerTestOneInput(const uint8_t *d, size_t n) { tl_checksum(0); return 0; }\n") {
  FuzzDriver d;
  d.combination = {"tl_checksum", {"tl_checksum"}, 0};
  d.driver_id = make_driver_id(d.combination);
  d.source = source;
  return d;
}

CompileResult failure(const std::string& line) {
  return {false, parse_diagnostics(line), line};
}

}  // namespace

TEST_SUITE("repair") {
  TEST_CASE("knowledge base appends distinct entries and counts versions") {
    UsageKnowledgeBase kb;
    CHECK(kb.add({"k", "s", KbOrigin::Seed}));
    CHECK_FALSE(kb.add({"k", "s", KbOrigin::LearnedDriver}));
    CHECK(kb.add({"k", "s2", KbOrigin::Seed}));
    CHECK(kb.version() == 2);
    testing::TempDir dir;
    save_kb(kb, dir / "kb.json");
    CHECK(load_kb(dir / "kb.json") == kb);
    auto j = to_json(kb);
    j["version"] = 7;
    CHECK_THROWS_AS(kb_from_json(j), Error);
  }

  TEST_CASE("seed samples from headers and existing drivers") {
    const std::vector<ApiSpec> apis = {{"f", "lib.h", "int f(int)"}, {"g", "lib.h", "void g(void)"}};
    const auto hs = header_seed_samples(apis);
    REQUIRE(hs.size() == 2);
    CHECK(hs[0].first == "f");
    CHECK(hs[0].second == "#include \"lib.h\"\nint f(int);");
    testing::TempDir dir;
    testing::write_file(dir / "d1.c", "void t(void) { f(1); g(); }\n");
    testing::write_file(dir / "notes.txt", "f(1)");
    const auto ds = driver_seed_samples(dir.path(), apis);
    REQUIRE(ds.size() == 1);
    CHECK(ds[0].first == "f g");
    const auto kb = init_kb({{"f", "x"}, {"f", "x"}, {"g", "y"}});
    CHECK(kb.entries().size() == 2);
    CHECK(kb.version() == 2);
  }

  TEST_CASE("diagnostic parsing") {
    const auto d = parse_diagnostics(
        "/tmp/w/drv.c:12:5: error: use of undeclared identifier 'tl_buf'\n"
        "drv.c:3: warning: unused variable 'x'\n"
        "In file included from a.c:1:\n"
        "drv.c:1:10: fatal error: 'toylib.h' file not found\n");
    REQUIRE(d.size() == 3);
    CHECK(d[0] == Diagnostic{"/tmp/w/drv.c", 12, 5, Severity::Error, "use of undeclared identifier 'tl_buf'"});
    CHECK(d[1].severity == Severity::Warning);
    CHECK(d[1].column == 0);
    CHECK(d[2].severity == Severity::Error);
  }

  TEST_CASE("query normalization drops paths and positions") {
    const auto a = construct_query(parse_diagnostics("/a/b/drv.c:12:5: error: no member 'len' in /x/y/z.h:3:1\n"));
    const auto b = construct_query(parse_diagnostics("drv.c:99:1: error: no member 'len' in z.h:8\n"));
    CHECK(a == b);
    CHECK(a == "drv.c: no member 'len' in z.h\nlen");
    CHECK_THROWS_AS(construct_query({}), Error);
    CHECK_THROWS_AS(construct_query(parse_diagnostics("x.c:1:1: warning: w\n")), Error);
  }

  TEST_CASE("kb query ranks by identifier overlap and never returns unrelated entries") {
    UsageKnowledgeBase kb;
    kb.add({"tl_buf_new", "tl_buf *b = tl_buf_new(16);", KbOrigin::Seed});
    kb.add({"tl_parse_kv", "tl_kv *kv = tl_parse_kv(s, n);", KbOrigin::Seed});
    kb.add({"other", "int unrelated;", KbOrigin::Seed});
    const auto hits = query_kb(kb, "drv.c: use of undeclared identifier 'tl_buf'\ntl_buf");
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].key == "tl_buf_new");
    CHECK(query_kb(kb, "drv.c: error: expected").empty());
    const auto best = query_kb(kb, "tl_parse_kv tl_kv tl_buf_new", 1);
    REQUIRE(best.size() == 1);
  }

  TEST_CASE("budget law over scripted failure sequences") {
    PromptTemplates prompts;
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
      const int m = 1 + static_cast<int>(rng() % 7);
      const int passes_at = 1 + static_cast<int>(rng() % 9);  // may lie beyond m
      std::vector<CompileResult> seq;
      for (int i = 1; i < passes_at; ++i) seq.push_back(failure("drv.c:1:1: error: step " + std::to_string(i)));
      seq.push_back({true, {}, ""});
      auto compiler = ScriptedCompilerRunner::from_sequence(seq);
      int llm_calls = 0;
      const bool flaky = rng() % 2;
      auto gw = testing::scripted_gateway([&](const ChatRequest&) -> std::string {
        ++llm_calls;
        if (flaky && llm_calls % 2 == 0) throw ProviderError("down", false);
        return "```c\nint LLVMFuzzerTestOneInput(void) { tl_checksum(0); return 0; }\n```";
      });
      auto kb = init_kb({{"tl_checksum", "uint32_t tl_checksum(const tl_buf *buf);"}});
      testing::TempDir dir;
      const auto r = repair_loop(sample_driver(), kb, compiler, *gw, prompts, {m, dir.path()});
      CAPTURE(m);
      CAPTURE(passes_at);
      const bool ok = passes_at <= m;
      CHECK(r.compile_calls == static_cast<std::size_t>(ok ? passes_at : m));
      CHECK(r.compile_calls >= 1);
      CHECK(r.driver.repair_iterations_used == static_cast<int>(r.compile_calls));
      CHECK(r.driver.status == (ok ? DriverStatus::Compiled : DriverStatus::RepairFailed));
      CHECK(r.kb.version() == kb.version() + (ok ? 1 : 0));
      if (ok) CHECK(r.kb.entries().back().origin == KbOrigin::LearnedDriver);
      CHECK(llm_calls == static_cast<int>(r.compile_calls) - (ok ? 1 : 0));
    }
  }

  TEST_CASE("unchanged source with an empty KB is a fixed point") {
    PromptTemplates prompts;
    auto compiler = ScriptedCompilerRunner::from_rules({{"#include \"toylib.h\"", "", "drv.c:1:1: error: missing header"}});
    auto gw = testing::scripted_gateway([](const ChatRequest& r) {
      const auto& u = r.messages.back().text;
      const auto a = u.find("```c\n") + 5;
      return "```c\n" + u.substr(a, u.find("\n```", a) - a) + "```";
    });
    testing::TempDir dir;
    const auto d = sample_driver();
    const auto r = repair_loop(d, {}, compiler, *gw, prompts, {5, dir.path()});
    CHECK(r.driver.source == d.source);
    CHECK(r.driver.status == DriverStatus::RepairFailed);
    CHECK(r.compile_calls == 5);
    CHECK(r.kb.version() == 0);
  }

  TEST_CASE("compiler unavailability aborts") {
    PromptTemplates prompts;
    auto compiler = ScriptedCompilerRunner::always_unavailable();
    auto gw = testing::scripted_gateway([](const ChatRequest&) { return std::string(); });
    testing::TempDir dir;
    try {
      repair_loop(sample_driver(), {}, compiler, *gw, prompts, {5, dir.path()});
      FAIL("expected CompilerUnavailable");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::CompilerUnavailable);
    }
  }

  TEST_CASE("command runner maps exit codes and output") {
    testing::TempDir dir;
    testing::write_file(dir / "a.c", "int x;\n");
    CommandCompilerRunner ok({"test -f {src} && touch {out}", {}});
    CHECK(ok.compile(dir / "a.c", dir / "a").success);
    CHECK(std::filesystem::exists(dir / "a"));
    CommandCompilerRunner bad({"echo '{src}:3:4: error: boom' && false", {}});
    const auto r = bad.compile(dir / "a.c", dir / "a");
    CHECK_FALSE(r.success);
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].message == "boom");
    CommandCompilerRunner silent({"false", {}});
    const auto s = silent.compile(dir / "a.c", dir / "a");
    CHECK_FALSE(s.success);
    CHECK(s.diagnostics.size() == 1);
    CommandCompilerRunner missing({"/nonexistent/cc {src}", {}});
    CHECK_THROWS_AS(missing.compile(dir / "a.c", dir / "a"), Error);
    CommandCompilerRunner inc({"cc {includes} {src}", {"/opt/x y"}});
    CHECK(inc.command_for("s.c", "o").find("-I'/opt/x y'") != std::string::npos);
  }

  TEST_CASE("scripted compiler from json") {
    testing::TempDir dir;
    testing::write_file(dir / "a.c", "hello\n");
    auto rules = ScriptedCompilerRunner::from_json(json::parse(R"({"rules":[{"forbid":"hello","error":"a.c:1:1: error: no hello"}]})"));
    CHECK_FALSE(rules.compile(dir / "a.c", dir / "a").success);
    auto seq = ScriptedCompilerRunner::from_json(json::parse(R"({"sequence":["a.c:1:1: error: x", true]})"));
    CHECK_FALSE(seq.compile(dir / "a.c", dir / "a").success);
    CHECK(seq.compile(dir / "a.c", dir / "a").success);
    CHECK(seq.compile(dir / "a.c", dir / "a").success);
    CHECK(seq.calls() == 3);
  }
}
