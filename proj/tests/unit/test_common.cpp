#include <doctest.h>

#include <vector>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/glob.hpp"
#include "kgfuzz/common/hash.hpp"
#include "kgfuzz/common/parallel.hpp"
#include "kgfuzz/common/text.hpp"
#include "support.hpp"

using namespace kgfuzz;

TEST_SUITE("common") {
  TEST_CASE("glob segments and double star") {
    CHECK(glob_match("*.c", "a.c"));
    CHECK_FALSE(glob_match("*.c", "dir/a.c"));
    CHECK(glob_match("**/*.c", "a.c"));
    CHECK(glob_match("**/*.c", "x/y/a.c"));
    CHECK(glob_match("src/**", "src/a/b.h"));
    CHECK(glob_match("src/?.h", "src/x.h"));
    CHECK_FALSE(glob_match("src/?.h", "src/xy.h"));
    CHECK_FALSE(glob_match("lib/*.c", "src/a.c"));
  }

  TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(short_id("x_", "abc", 6) == "x_ba7816");
  }

  TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  }

  TEST_CASE("text helpers") {
    CHECK(text::trim("  a b \n") == "a b");
    CHECK(text::split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
    CHECK(text::split_lines("a\r\nb\n") == std::vector<std::string>{"a", "b"});
    CHECK(text::basename("x/y\\z.c") == "z.c");
    CHECK(text::identifiers("f(a_1, *_b)") == std::vector<std::string>{"f", "a_1", "_b"});
    CHECK(text::contains_word("call foo(x)", "foo"));
    CHECK_FALSE(text::contains_word("call foobar(x)", "foo"));
    CHECK(text::render("{{a}}-{{b}}-{{c}}", {{"a", "1"}, {"b", "{{a}}"}}) == "1-{{a}}-{{c}}");
    CHECK(text::render_command("cc {src} -o {out} {x}", {{"src", "a.c"}, {"out", "a"}}) == "cc a.c -o a {x}");
  }

  TEST_CASE("atomic write round trip and stable json") {
    testing::TempDir dir;
    const auto p = dir / "sub/x.json";
    std::filesystem::create_directories(p.parent_path());
    write_json_file(p, {{"b", 1}, {"a", {1, 2}}});
    CHECK(read_text_file(p) == "{\n  \"a\": [\n    1,\n    2\n  ],\n  \"b\": 1\n}\n");
    CHECK_THROWS_AS(read_text_file(dir / "missing"), Error);
  }

  TEST_CASE("parallel_for covers every index and rethrows the lowest failure") {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (int h : hits) CHECK(h == 1);
    try {
      parallel_for(50, 3, [](std::size_t i) {
        if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "7");
    }
  }
}
