#include <doctest.h>

#include <random>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/driver/driver_factory.hpp"
#include "kgfuzz/index/embedder.hpp"
#include "kgfuzz/llm/prompts.hpp"
#include "kgfuzz/triage/crash_triage.hpp"
#include "support.hpp"
#include "verdict_fuzz.hpp"

using namespace kgfuzz;

namespace {

std::string overflow_report(const std::string& pid = "7") {
  return "==" + pid + "==ERROR: AddressSanitizer: heap-buffer-overflow on address 0x1\n"
         "READ of size 2 at 0x1 thread T0\n"
         "    #0 0x1 in __asan_memcpy /llvm/compiler-rt/lib/asan/asan_interceptors.cpp:22:3\n"
         "    #1 0x2 in copy_range src/tl_parse.c:10:3\n"
         "    #2 0x3 in parse_pair src/tl_parse.c:23:14\n"
         "    #3 0x4 in tl_parse_kv src/tl_parse.c:32:19\n"
         "    #4 0x5 in LLVMFuzzerTestOneInput driver.c:5:20\n"
         "\n0x1 is located 0 bytes after 1-byte region\nallocated by thread T0 here:\n"
         "    #0 0x9 in malloc /llvm/compiler-rt/lib/asan/asan_malloc_linux.cpp:69:3\n"
         "    #1 0xa in copy_range src/tl_parse.c:7:13\n"
         "SUMMARY: AddressSanitizer: heap-buffer-overflow src/tl_parse.c:10:3 in copy_range\n";
}

std::string driver_report() {
  return "==9==ERROR: AddressSanitizer: heap-use-after-free on address 0x2\n"
         "    #0 0x1 in LLVMFuzzerTestOneInput driver.c:6:3\n"
         "    #1 0x2 in fuzzer::Fuzzer::ExecuteCallback(unsigned char const*, unsigned long) FuzzerLoop.cpp:611:15\n"
         "SUMMARY: AddressSanitizer: heap-use-after-free driver.c:6:3 in LLVMFuzzerTestOneInput\n";
}

FuzzDriver parse_driver() {
  FuzzDriver d;
  d.combination = {"tl_parse_kv", {"tl_parse_kv", "tl_parse_free"}, 0};
  d.driver_id = "drv_test";
  d.source =
      "#include \"toylib.h\"\n\nint LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {\n"
      "  tl_kv *kv = tl_parse_kv((const char *)data, size);\n  tl_parse_free(kv);\n  return kv->key != 0;\n}\n";
  d.status = DriverStatus::Compiled;
  return d;
}

}  // namespace

TEST_SUITE("triage") {
  TEST_CASE("stack parsing skips runtime frames and stops after the first stack") {
    const auto frames = parse_stack_frames(overflow_report());
    REQUIRE(frames.size() == 4);
    CHECK(frames[0] == StackFrame{"copy_range", "src/tl_parse.c", 10});
    CHECK(frames[3].function == "LLVMFuzzerTestOneInput");
    CHECK(detect_sanitizer(overflow_report()) == SanitizerKind::Asan);
    CHECK(detect_sanitizer("a.c:1:2: runtime error: shift\nSUMMARY: UndefinedBehaviorSanitizer: x") == SanitizerKind::Ubsan);
  }

  TEST_CASE("crash ids ignore addresses and pids; unparseable reports are rejected") {
    const auto a = parse_crash({"d1", "s1", overflow_report("7")});
    const auto b = parse_crash({"d2", "s2", overflow_report("12345")});
    CHECK(a.crash_id == b.crash_id);
    CHECK(a.crash_id != parse_crash({"d1", "s1", driver_report()}).crash_id);
    try {
      parse_crash({"d", "s", "no frames here"});
      FAIL("expected UnparseableReport");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::UnparseableReport);
    }
  }

  TEST_CASE("dedup keeps the earliest, counts duplicates and is idempotent") {
    std::vector<RawCrash> raws = {{"d2", "s1", overflow_report()},
                                  {"d1", "s2", driver_report()},
                                  {"d3", "s3", "garbage"},
                                  {"d1", "s4", overflow_report("99")}};
    std::vector<std::string> w;
    const auto recs = dedup_crashes(raws, &w);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].driver_id == "d2");
    CHECK(recs[0].duplicates == 2);
    CHECK(w.size() == 1);
    CHECK(dedup_records(recs) == recs);
    auto doubled = recs;
    doubled.insert(doubled.end(), recs.begin(), recs.end());
    const auto folded = dedup_records(doubled);
    REQUIRE(folded.size() == 2);
    CHECK(folded[0].duplicates == 4);
    for (const auto& r : recs) CHECK(crash_record_from_json(to_json(r)) == r);
  }

  TEST_CASE("context: driver slice, library sources and unresolved frames") {
    const auto g = testing::toylib_graph();
    const auto d = parse_driver();
    const auto rec = parse_crash({d.driver_id, "s", overflow_report()});
    const auto ctx = extract_crash_context(rec, &d, g);
    CHECK(ctx.driver_slice.find("tl_parse_kv((const char *)data") != std::string::npos);
    REQUIRE(ctx.library_frames.size() == 3);
    CHECK(ctx.library_frames[0].function == "copy_range");
    CHECK(ctx.library_sources.size() == 3);
    CHECK(ctx.render().find("Library function copy_range:") != std::string::npos);

    RawCrash odd{d.driver_id, "s", "==1==ERROR: AddressSanitizer: SEGV\n    #0 0x1 in mystery_fn /elsewhere/m.c:3:1\n"};
    const auto ctx2 = extract_crash_context(parse_crash(odd), nullptr, g);
    CHECK(ctx2.library_frames.empty());
    REQUIRE(ctx2.notes.size() == 1);
    CHECK(ctx2.notes[0].rfind("FrameUnresolved", 0) == 0);
  }

  TEST_CASE("hypothesis parsing") {
    CHECK(parse_hypotheses("- a\n* b\n1. c\n") == std::vector<std::string>{"a", "b", "c"});
    CHECK(parse_hypotheses("Just prose.") == std::vector<std::string>{"Just prose."});
    CHECK(parse_hypotheses("").empty());
  }

  TEST_CASE("cwe matching against the starter knowledge base") {
    const auto kb = load_cwe_kb(KGFUZZ_DATA_DIR "/cwe_starter.json");
    CHECK(kb.size() >= 10);
    HashEmbedder e;
    const auto idx = build_cwe_index(kb, e);
    const auto m = match_cwe({"copy_range reads data past the end of the intended buffer", "unrelated words here"}, kb,
                             idx, e, 0.5);
    REQUIRE_FALSE(m.empty());
    CHECK(m[0].cwe_id == "CWE-125");
    for (std::size_t i = 1; i < m.size(); ++i) CHECK(m[i - 1].score >= m[i].score);
    for (const auto& x : m) CHECK(x.score >= 0.5);
    CHECK(match_cwe({}, kb, idx, e).empty());
    PropertyGraphIndex empty(ChunkKind::NL, e.dim(), e.fingerprint());
    CHECK_THROWS_AS(match_cwe({"x"}, {}, empty, e), Error);
    CHECK_THROWS_AS(cwe_kb_from_json(json::parse(R"([{"cwe_id":"CWE-1","description":"","example_code":"x"}])")), Error);
  }

  TEST_CASE("ambiguous answers default to misuse with low confidence") {
    const auto g = testing::toylib_graph();
    const auto d = parse_driver();
    const auto rec = parse_crash({d.driver_id, "s", overflow_report()});
    const auto with_frames = extract_crash_context(rec, &d, g);
    CrashContext frameless = with_frames;
    frameless.library_frames.clear();
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 300; ++i) {
      const auto a = testing::ambiguous_answer(rng);
      const auto& ctx = (a.needs_frameless_context || rng() % 2) ? frameless : with_frames;
      const auto v = interpret_verdict(rec, ctx, {}, a.text);
      CAPTURE(a.text);
      CHECK(v.classification == CrashClass::MisuseCrash);
      CHECK(v.confidence == Confidence::Low);
    }
  }

  TEST_CASE("well-formed verdicts") {
    const auto g = testing::toylib_graph();
    const auto d = parse_driver();
    const auto rec = parse_crash({d.driver_id, "s", overflow_report()});
    const auto ctx = extract_crash_context(rec, &d, g);
    const auto bug = interpret_verdict(rec, ctx, {{"CWE-125", 0.8}},
                                       "verdict: LIBRARY_BUG\nConfidence: HIGH\nRationale: copy_range over-reads.\n");
    CHECK(bug.classification == CrashClass::SuspectedLibraryBug);
    CHECK(bug.confidence == Confidence::High);
    CHECK(bug.matched_cwes == std::vector<std::string>{"CWE-125"});
    CHECK(bug.rationale.find("Library frames: copy_range") != std::string::npos);
    const auto misuse = interpret_verdict(rec, ctx, {}, "VERDICT: MISUSE\nCONFIDENCE: MEDIUM\nRATIONALE: driver frees early\n");
    CHECK(misuse.classification == CrashClass::MisuseCrash);
    CHECK(misuse.confidence == Confidence::Medium);
  }

  TEST_CASE("classify survives LLM failure") {
    const auto g = testing::toylib_graph();
    PromptTemplates prompts;
    const auto rec = parse_crash({"d", "s", overflow_report()});
    auto gw = testing::scripted_gateway([](const ChatRequest&) -> std::string { throw ProviderError("x", false); });
    const auto v = classify(rec, extract_crash_context(rec, nullptr, g), {}, {}, *gw, prompts);
    CHECK(v.classification == CrashClass::MisuseCrash);
    CHECK(v.confidence == Confidence::Low);
    CHECK(hypothesize_patterns(rec, {}, *gw, prompts).empty());
  }

  TEST_CASE("end-to-end triage with the synthetic model and the log round trip") {
    const auto g = testing::toylib_graph();
    PromptTemplates prompts;
    HashEmbedder e;
    const auto kb = load_cwe_kb(KGFUZZ_DATA_DIR "/cwe_starter.json");
    const auto idx = build_cwe_index(kb, e);
    const std::vector<FuzzDriver> drivers = {parse_driver()};
    auto gw = testing::synthetic_gateway();
    TriageInputs in{g, drivers, kb, idx, e, *gw, prompts, 0.5};
    const auto recs = dedup_crashes({{"drv_test", "s", overflow_report()}, {"drv_test", "s2", driver_report()}});
    const auto verdicts = triage_crashes(recs, in, 2);
    REQUIRE(verdicts.size() == 2);
    CHECK(verdicts[0].classification == CrashClass::SuspectedLibraryBug);
    CHECK_FALSE(verdicts[0].library_frames.empty());
    CHECK_FALSE(verdicts[0].matched_cwes.empty());
    CHECK(verdicts[1].classification == CrashClass::MisuseCrash);
    testing::TempDir dir;
    write_triage_log(dir / "t.jsonl", verdicts);
    const auto back = read_triage_log(dir / "t.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0] == to_json(verdicts[0]));
  }
}
