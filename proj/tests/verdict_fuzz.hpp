#pragma once

#include <random>
#include <string>

namespace kgfuzz::testing {

struct AmbiguousAnswer {
  std::string text;
  bool needs_frameless_context = false;  // only malformed because the stack has no library frame
};

/// Classifier output that must not be read as a library bug: missing, repeated, conflicting
/// or unrecognized fields, low-confidence claims, frameless claims and plain noise.
inline AmbiguousAnswer ambiguous_answer(std::mt19937_64& rng) {
  auto pick = [&](std::initializer_list<const char*> xs) { return std::string(*(xs.begin() + rng() % xs.size())); };
  const std::string rationale = "RATIONALE: " + pick({"The read is out of bounds.", "Unclear.", "see stack"}) + "\n";
  const std::string strong = pick({"MEDIUM", "HIGH"});
  switch (rng() % 11) {
    case 0: {
      std::string noise;
      const std::size_t n = rng() % 200;
      for (std::size_t i = 0; i < n; ++i) noise.push_back(static_cast<char>(rng() % 256));
      return {noise};
    }
    case 1:
      return {"CONFIDENCE: " + strong + "\n" + rationale};
    case 2:
      return {"VERDICT: LIBRARY_BUG\nVERDICT: " + pick({"MISUSE", "LIBRARY_BUG"}) + "\nCONFIDENCE: " + strong + "\n" +
              rationale};
    case 3:
      return {"VERDICT: LIBRARY_BUG\nCONFIDENCE: LOW\n" + rationale};
    case 4:
      return {"VERDICT: LIBRARY_BUG\nCONFIDENCE: " + strong + "\n" + rationale, true};
    case 5:
      return {"VERDICT: LIBRARY_BUG\n" +
              pick({"", "CONFIDENCE: HIGH\nCONFIDENCE: HIGH\n", "CONFIDENCE: MEDIUM\nCONFIDENCE: LOW\n"}) + rationale};
    case 6:
      return {"VERDICT: LIBRARY_BUG\nCONFIDENCE: " + strong + "\n" + pick({"", "RATIONALE:\n", "RATIONALE:   \n"})};
    case 7:
      return {"VERDICT: " + pick({"library_bug", "LIBRARY BUG", "BUG", "MAYBE", "LIBRARY_BUG?", ""}) +
              "\nCONFIDENCE: " + strong + "\n" + rationale};
    case 8:
      return {"VERDICT: LIBRARY_BUG\nCONFIDENCE: " + pick({"VERY HIGH", "0.9", "high", "", "MEDIUM-HIGH"}) + "\n" +
              rationale};
    case 9: {
      const std::string full = "VERDICT: LIBRARY_BUG\nCONFIDENCE: " + strong + "\n" + rationale;
      return {full.substr(0, rng() % 30)};
    }
    default:
      return {"I think this is probably a bug in the library, with high confidence, because the read overflows.\n"
              "RATIONALE: " + pick({"x", "y"}) + "\nRATIONALE: second\nVERDICT: LIBRARY_BUG\nCONFIDENCE: HIGH\n"};
  }
}

}  // namespace kgfuzz::testing
