#include "kgfuzz/fuzz/dataflow.hpp"

#include <algorithm>
#include <map>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/driver/driver_factory.hpp"
#include "kgfuzz/source/c_lexer.hpp"

namespace kgfuzz {
namespace {

bool is_assign_op(std::string_view t) {
  return t == "=" || t == "+=" || t == "-=" || t == "*=" || t == "/=" || t == "%=" || t == "&=" || t == "|=" ||
         t == "^=" || t == "<<=" || t == ">>=";
}

}  // namespace

DataFlowFacts extract_dataflow(const std::string& driver_source, std::vector<std::string> api_signatures,
                               std::vector<std::string>* warnings) {
  DataFlowFacts facts;
  facts.api_signatures = std::move(api_signatures);
  auto warn = [&](std::string w) {
    if (warnings) warnings->push_back(std::move(w));
  };

  std::vector<c::Token> toks;
  try {
    toks = c::lex(driver_source).tokens;
  } catch (const Error& e) {
    warn(std::string("data-flow analysis skipped: ") + e.what());
    return facts;
  }

  // Locate `LLVMFuzzerTestOneInput ( ... ) {`.
  std::size_t params_open = toks.size(), body_open = toks.size();
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (toks[i].is_ident() && toks[i].text == kFuzzEntryPoint && toks[i + 1].is("(")) {
      const std::size_t close = c::matching_close(toks, i + 1);
      if (close + 1 < toks.size() && toks[close + 1].is("{")) {
        params_open = i + 1;
        body_open = close + 1;
        break;
      }
    }
  }
  if (body_open == toks.size()) {
    warn("data-flow analysis skipped: no definition of " + std::string(kFuzzEntryPoint));
    return facts;
  }
  const std::size_t body_close = c::matching_close(toks, body_open);
  if (body_close == toks.size()) {
    warn("data-flow analysis skipped: unbalanced entry function body");
    return facts;
  }

  std::map<std::string, int> last_def;
  // Parameters: the last identifier of each comma-separated group.
  {
    const std::size_t close = body_open - 1;
    const c::Token* last_ident = nullptr;
    for (std::size_t i = params_open + 1; i <= close; ++i) {
      if (toks[i].is(",") || i == close) {
        if (last_ident && !c::is_type_keyword(last_ident->text)) last_def[last_ident->text] = last_ident->line;
        last_ident = nullptr;
      } else if (toks[i].is_ident() && !c::is_keyword(toks[i].text)) {
        last_ident = &toks[i];
      }
    }
  }

  std::vector<std::pair<std::string, int>> pending;  // definitions that take effect at the statement boundary
  auto flush = [&] {
    for (auto& [name, line] : pending) last_def[name] = line;
    pending.clear();
  };
  auto add_use = [&](const c::Token& t) {
    auto it = last_def.find(t.text);
    if (it == last_def.end()) return;
    DefUsePair p{t.text, it->second, t.line};
    if (std::find(facts.def_use_pairs.begin(), facts.def_use_pairs.end(), p) == facts.def_use_pairs.end()) {
      facts.def_use_pairs.push_back(std::move(p));
    }
  };

  int paren_depth = 0;
  for (std::size_t i = body_open + 1; i < body_close; ++i) {
    const c::Token& t = toks[i];
    if (t.is("(") || t.is("[")) ++paren_depth;
    if (t.is(")") || t.is("]")) --paren_depth;
    if (t.is(";") || t.is("{") || t.is("}") || (t.is(",") && paren_depth == 0)) {
      flush();
      continue;
    }
    if (!t.is_ident() || c::is_keyword(t.text) || c::is_type_keyword(t.text)) continue;
    const c::Token* prev = i > 0 ? &toks[i - 1] : nullptr;
    const c::Token* next = i + 1 < toks.size() ? &toks[i + 1] : nullptr;
    if (prev && (prev->is(".") || prev->is("->"))) continue;  // member name
    if (next && next->is("(")) continue;                     // call
    const bool incdec = (next && (next->is("++") || next->is("--"))) || (prev && (prev->is("++") || prev->is("--")));
    if (next && next->is("=")) {
      pending.emplace_back(t.text, t.line);
    } else if (next && is_assign_op(next->text)) {
      add_use(t);
      pending.emplace_back(t.text, t.line);
    } else if (incdec) {
      add_use(t);
      pending.emplace_back(t.text, t.line);
    } else {
      add_use(t);
    }
  }
  facts.parsed = true;
  return facts;
}

std::string format_dataflow(const DataFlowFacts& facts) {
  if (!facts.parsed) return "(unavailable)";
  if (facts.def_use_pairs.empty()) return "(none)";
  std::string out;
  for (const auto& p : facts.def_use_pairs) {
    out += p.variable + ": defined at line " + std::to_string(p.def_line) + " -> used at line " + std::to_string(p.use_line) + "\n";
  }
  return out;
}

}  // namespace kgfuzz
