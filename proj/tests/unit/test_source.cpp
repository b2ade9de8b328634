#include <doctest.h>

#include <algorithm>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/source/c_lexer.hpp"
#include "kgfuzz/source/source_analyzer.hpp"
#include "repo_gen.hpp"
#include "support.hpp"

using namespace kgfuzz;

namespace {

bool has_call(const SourceModel& m, const std::string& caller, const std::string& callee, CallKind kind) {
  return std::any_of(m.calls.begin(), m.calls.end(), [&](const CallEdgeRaw& e) {
    return e.caller == caller && e.callee == callee && e.kind == kind;
  });
}

}  // namespace

TEST_SUITE("source") {
  TEST_CASE("lexer drops comments and separates directives") {
    const auto r = c::lex("#define M(x) (x)\nint a; /* b(); */ // c();\nconst char *s = \"d()\";\n");
    REQUIRE(r.directives.size() == 1);
    CHECK(r.directives[0].text.rfind("#define M", 0) == 0);
    std::vector<std::string> idents;
    for (const auto& t : r.tokens) {
      if (t.is_ident()) idents.push_back(t.text);
    }
    CHECK(idents == std::vector<std::string>{"int", "a", "const", "char", "s"});
    CHECK(c::function_like_macros(r.directives) == std::vector<std::string>{"M"});
    CHECK_THROWS_AS(c::lex("int a; /* open"), Error);
    CHECK_THROWS_AS(c::lex("char *s = \"open"), Error);
  }

  TEST_CASE("definitions, signatures and line spans") {
    const auto pf = parse_source_text("a.c",
                                      "static int helper(int x, const char *s)\n{\n  return x;\n}\n"
                                      "int proto(void);\n"
                                      "struct s { int (*fp)(int); };\n"
                                      "unsigned long api(struct s *p, ...) {\n  return helper(1, \"\");\n}\n");
    REQUIRE(pf.functions.size() == 2);
    CHECK(pf.functions[0].name == "helper");
    CHECK(pf.functions[0].is_file_local);
    CHECK(pf.functions[0].line_span == LineSpan{1, 4});
    CHECK(pf.functions[0].signature == "int helper(int, const char *)");
    CHECK(pf.functions[1].name == "api");
    CHECK_FALSE(pf.functions[1].is_file_local);
    CHECK(pf.functions[1].line_span == LineSpan{7, 9});
  }

  TEST_CASE("parameter normalization strips names") {
    CHECK(normalize_params("(int x, const char *s)") == "int, const char *");
    CHECK(normalize_params("(void)") == "void");
    CHECK(normalize_params("()") == "");
  }

  TEST_CASE("repository parse matches generated ground truth") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      testing::TempDir dir;
      const auto truth = testing::generate_repo(dir.path(), seed);
      const auto m = parse_repository(dir.path(), {"**/*.c", "**/*.h"});
      CAPTURE(seed);
      CHECK(m.functions.size() == truth.functions);
      CHECK(m.files.size() == truth.files);
      for (const auto& [caller, callee] : truth.internal_calls) CHECK(has_call(m, caller, callee, CallKind::Internal));
      for (const auto& [caller, callee] : truth.external_calls) CHECK(has_call(m, caller, callee, CallKind::External));
      CHECK(m.calls.size() == truth.internal_calls.size() + truth.external_calls.size());
    }
  }

  TEST_CASE("repository errors") {
    CHECK_THROWS_WITH_AS(parse_repository("/nonexistent/dir", {}), doctest::Contains("RootNotFound"), Error);
    testing::TempDir dir;
    testing::write_file(dir / "a.c", "int f(void) { return 0; }\n");
    try {
      parse_repository(dir.path(), {"lib/**/*.c"});
      FAIL("expected NoSourceFiles");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NoSourceFiles);
    }
  }

  TEST_CASE("unparseable file is skipped with a warning") {
    testing::TempDir dir;
    testing::write_file(dir / "good.c", "int f(void) { return g(); }\n");
    testing::write_file(dir / "bad.c", "int h(void) { return 0; /* never closed\n");
    const auto m = parse_repository(dir.path(), {"**/*.c"});
    REQUIRE(m.functions.size() == 1);
    CHECK(m.functions[0].name == "f");
    CHECK(std::any_of(m.warnings.begin(), m.warnings.end(),
                      [](const std::string& w) { return w.find("bad.c") != std::string::npos; }));
  }

  TEST_CASE("api list parsing") {
    const auto apis = parse_api_list("# comment\n\nf\tlib.h\tint f(int)\ng\tlib.h\tvoid g(void)\n");
    REQUIRE(apis.size() == 2);
    CHECK(apis[1] == ApiSpec{"g", "lib.h", "void g(void)"});
    auto code_of = [](const char* text) {
      try {
        parse_api_list(text);
      } catch (const Error& e) {
        return e.code();
      }
      return Errc::IoError;
    };
    CHECK(code_of("f\tlib.h\n") == Errc::MalformedLine);
    CHECK(code_of("f\tlib.h\tint f(void)\nf\tlib.h\tint f(void)\n") == Errc::DuplicateApi);
  }

  TEST_CASE("source model json round trip") {
    testing::TempDir dir;
    testing::generate_repo(dir.path(), 3);
    auto m = parse_repository(dir.path(), {});
    m.api_list = {{"fn_0_0", "gen.h", "int fn_0_0(int)"}};
    CHECK(source_model_from_json(to_json(m)) == m);
  }
}
