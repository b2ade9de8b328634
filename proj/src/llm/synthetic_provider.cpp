#include <algorithm>
#include <regex>
#include <set>

#include "kgfuzz/common/hash.hpp"
#include "kgfuzz/common/text.hpp"
#include "kgfuzz/llm/providers.hpp"

namespace kgfuzz {
namespace {

std::string task_of(const ChatRequest& r) {
  static const std::regex kTag(R"(\[task: (\w+)\])");
  for (const auto& m : r.messages) {
    std::smatch sm;
    if (m.speaker == "system" && std::regex_search(m.text, sm, kTag)) return sm[1];
  }
  return "";
}

const std::string& last_user(const ChatRequest& r) {
  static const std::string kEmpty;
  for (auto it = r.messages.rbegin(); it != r.messages.rend(); ++it) {
    if (it->speaker == "user") return it->text;
  }
  return kEmpty;
}

const std::string& first_user(const ChatRequest& r) {
  static const std::string kEmpty;
  for (const auto& m : r.messages) {
    if (m.speaker == "user") return m.text;
  }
  return kEmpty;
}

// Rest of the first line starting with `prefix`.
std::string field(const std::string& text, std::string_view prefix) {
  for (const auto& line : text::split_lines(text)) {
    if (line.starts_with(prefix)) return std::string(text::trim(std::string_view(line).substr(prefix.size())));
  }
  return "";
}

// Text between `begin` and `end` markers (end optional).
std::string section(const std::string& text, std::string_view begin, std::string_view end) {
  auto b = text.find(begin);
  if (b == std::string::npos) return "";
  b += begin.size();
  auto e = end.empty() ? std::string::npos : text.find(end, b);
  return text.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

std::vector<std::string> comma_list(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& part : text::split(s, ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

void push_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

// Leading identifiers of "- name: ..." answer lines.
std::vector<std::string> answer_names(const std::string& answer) {
  std::vector<std::string> out;
  for (const auto& line : text::split_lines(answer)) {
    auto t = text::trim(line);
    while (!t.empty() && (t.front() == '-' || t.front() == ' ')) t.remove_prefix(1);
    std::size_t n = 0;
    while (n < t.size() && text::is_ident_char(t[n])) ++n;
    if (n > 0 && text::is_ident_start(t[0])) push_unique(out, std::string(t.substr(0, n)));
  }
  return out;
}

std::string summarize_function(const std::string& user) {
  const std::string name = field(user, "Function: ");
  const std::string sig = field(user, "Signature: ");
  const std::string file = field(user, "File: ");
  const std::string src = section(user, "```c\n", "```");
  std::vector<std::string> calls;
  const auto ids = text::identifiers(src);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto pos = src.find(ids[i] + "(");
    if (pos == std::string::npos || ids[i] == name || ids[i] == "sizeof" || ids[i] == "if" || ids[i] == "while" ||
        ids[i] == "for" || ids[i] == "switch" || ids[i] == "return") {
      continue;
    }
    push_unique(calls, ids[i]);
  }
  std::string out = name + " is defined in " + file + " with signature " + sig + ".";
  if (!calls.empty()) out += " It calls " + text::join(calls, ", ") + ".";
  return out;
}

std::string summarize_file(const std::string& user) {
  const std::string path = field(user, "File: ");
  std::vector<std::string> names;
  static const std::regex kName(R"((\w+)\()");
  for (const auto& line : text::split_lines(section(user, "Functions:\n", ""))) {
    std::smatch m;
    if (std::regex_search(line, m, kName)) names.push_back(m[1]);
  }
  if (names.empty()) return "Module " + path + " holds declarations only.";
  return "Module " + path + " implements " + text::join(names, ", ") + ".";
}

std::string combine_target(const std::string& user) {
  static const std::regex kTarget(R"(together with (\w+)\?)");
  std::smatch m;
  return std::regex_search(user, m, kTarget) ? std::string(m[1]) : "";
}

std::string names_answer(const std::vector<std::string>& names, const std::string& reason) {
  std::string out;
  for (const auto& n : names) out += "- " + n + ": " + reason + "\n";
  return out;
}

std::string combine_initial(const std::string& user) {
  const auto known = comma_list(field(user, "Known library APIs: "));
  const std::string ctx = section(user, "Context:\n", "\n\nAnswer the query");
  std::vector<std::string> names;
  push_unique(names, combine_target(user));
  for (const auto& k : known) {
    if (text::contains_word(ctx, k)) push_unique(names, k);
  }
  names.erase(std::remove(names.begin(), names.end(), ""), names.end());
  return names_answer(names, "related through the retrieved context");
}

std::string combine_refine(const std::string& user) {
  const auto known = comma_list(field(user, "Known library APIs: "));
  auto names = answer_names(section(user, "Existing answer:\n", "\n\nNew context:"));
  const std::string ctx = section(user, "New context:\n", "\n\nRefine the existing answer");
  for (const auto& k : known) {
    if (text::contains_word(ctx, k)) push_unique(names, k);
  }
  std::vector<std::string> kept;
  for (const auto& n : names) {
    if (std::find(known.begin(), known.end(), n) != known.end()) kept.push_back(n);
  }
  return names_answer(kept, "supported by the context");
}

std::string combine_final(const std::string& user) {
  static const std::regex kTarget(R"(combined with (\w+) in one fuzz driver, at most (\d+))");
  std::smatch m;
  std::string target;
  std::size_t max_len = 6;
  if (std::regex_search(user, m, kTarget)) {
    target = m[1];
    max_len = std::stoul(m[2]);
  }
  const auto known = comma_list(field(user, "Known library APIs: "));
  std::vector<std::string> names;
  if (!target.empty()) names.push_back(target);
  for (const auto& n : answer_names(section(user, "Draft answer:\n", "\n\nOutput the API names"))) {
    if (std::find(known.begin(), known.end(), n) != known.end()) push_unique(names, n);
  }
  if (names.size() > max_len) names.resize(max_len);
  return text::join(names, "\n") + "\n";
}

struct ApiCtx {
  std::string name, header, signature;
};

std::string ret_type(const ApiCtx& a) {
  const auto pos = a.signature.find(a.name + "(");
  return pos == std::string::npos ? "void" : std::string(text::trim(a.signature.substr(0, pos)));
}

std::vector<std::string> param_types(const ApiCtx& a) {
  const auto open = a.signature.find(a.name + "(");
  if (open == std::string::npos) return {};
  const auto b = open + a.name.size() + 1;
  const auto e = a.signature.rfind(')');
  if (e == std::string::npos || e < b) return {};
  std::vector<std::string> out;
  for (const auto& p : comma_list(a.signature.substr(b, e - b))) {
    if (p != "void") out.push_back(p);
  }
  return out;
}

bool is_destructor(const std::string& name) {
  for (std::string_view w : {"free", "destroy", "close", "release", "delete"}) {
    if (name.find(w) != std::string::npos) return true;
  }
  return false;
}

std::string strip_const(std::string t) {
  if (t.starts_with("const ")) t = t.substr(6);
  return t;
}

std::string generate_driver(const std::string& user) {
  std::vector<ApiCtx> apis;
  for (const auto& line : text::split_lines(user)) {
    if (line.starts_with("API: ")) apis.push_back({line.substr(5), "", ""});
    else if (line.starts_with("Header: ") && !apis.empty()) apis.back().header = line.substr(8);
    else if (line.starts_with("Signature: ") && !apis.empty()) apis.back().signature = line.substr(11);
  }
  std::vector<std::string> names;
  for (const auto& a : apis) names.push_back(a.name);

  // Producers first, destructors last, combination order otherwise.
  std::vector<const ApiCtx*> order;
  auto produces = [](const ApiCtx& a) {
    if (ret_type(a).find('*') == std::string::npos) return false;
    for (const auto& p : param_types(a)) {
      const auto base = strip_const(p);
      if (base.find('*') != std::string::npos && base.find("char") == std::string::npos &&
          base.find("uint8_t") == std::string::npos && base.find("void") == std::string::npos) {
        return false;
      }
    }
    return true;
  };
  for (const auto& a : apis) if (produces(a) && !is_destructor(a.name)) order.push_back(&a);
  for (const auto& a : apis) if (!produces(a) && !is_destructor(a.name)) order.push_back(&a);
  for (const auto& a : apis) if (is_destructor(a.name)) order.push_back(&a);

  bool need_str = false, need_scratch = false;
  std::vector<std::pair<std::string, std::string>> vars;  // (type, name)
  std::vector<std::string> body;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const ApiCtx& a = *order[k];
    std::vector<std::string> args;
    for (const auto& t : param_types(a)) {
      const std::string base = strip_const(t);
      if (base.find("**") != std::string::npos) {
        args.push_back("NULL");
      } else if (base == "char *") {
        need_str = true;
        args.push_back("str");
      } else if (base == "uint8_t *" || base == "unsigned char *" || base == "void *") {
        if (t.starts_with("const ")) {
          args.push_back(base == "void *" ? "(const void *)data" : "data");
        } else {
          need_scratch = true;
          args.push_back(base == "void *" ? "(void *)scratch" : "scratch");
        }
      } else if (base.find('*') != std::string::npos) {
        std::string var = "NULL";
        for (const auto& [vt, vn] : vars) {
          if (strip_const(vt) == base) var = vn;
        }
        args.push_back(var);
      } else {
        args.push_back("(" + base + ")size");
      }
    }
    const std::string call = a.name + "(" + text::join(args, ", ") + ")";
    const std::string rt = ret_type(a);
    if (rt.find('*') != std::string::npos) {
      const std::string v = "v" + std::to_string(k);
      body.push_back(rt + (rt.ends_with("*") ? "" : " ") + v + " = " + call + ";");
      vars.emplace_back(rt, v);
    } else if (rt == "void") {
      body.push_back(call + ";");
    } else {
      body.push_back("(void)" + call + ";");
    }
  }

  std::vector<std::string> headers;
  for (const auto& a : apis) {
    if (!a.header.empty() && a.header != "(unknown)") push_unique(headers, a.header);
  }
  // Some first drafts forget the library header so the repair path gets exercised.
  const bool forget_header = fnv1a64(text::join(names, ",")) % 3 == 0;
  std::string src = "#include <stddef.h>\n#include <stdint.h>\n#include <stdlib.h>\n#include <string.h>\n";
  if (!forget_header) {
    for (const auto& h : headers) src += "#include \"" + h + "\"\n";
  }
  src += "\nint LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {\n";
  if (need_str) {
    src += "  char *str = malloc(size + 1);\n  if (str == NULL) return 0;\n  memcpy(str, data, size);\n  str[size] = '\\0';\n";
  }
  if (need_scratch) {
    src += "  uint8_t *scratch = malloc(size + 1);\n  if (scratch == NULL) {\n";
    if (need_str) src += "    free(str);\n";
    src += "    return 0;\n  }\n";
  }
  for (const auto& line : body) src += "  " + line + "\n";
  if (need_scratch) src += "  free(scratch);\n";
  if (need_str) src += "  free(str);\n";
  src += "  return 0;\n}\n";
  return "```c\n" + src + "```\n";
}

std::string repair_driver(const std::string& user) {
  std::string src = section(user, "Driver source:\n```c\n", "```\n\nFix the compilation errors");
  if (src.ends_with('\n')) src.pop_back();  // newline added by the template before the fence
  const std::string cases = section(user, "Correct usage examples from the knowledge base:\n", "\n\nDriver source:");
  static const std::regex kInclude(R"(#include\s+"[^"]+")");
  std::vector<std::string> missing;
  for (std::sregex_iterator it(cases.begin(), cases.end(), kInclude), end; it != end; ++it) {
    const std::string inc = it->str();
    if (src.find(inc) == std::string::npos) push_unique(missing, inc);
  }
  if (!missing.empty()) {
    std::size_t insert_at = 0;
    for (std::size_t p = src.find("#include"); p != std::string::npos; p = src.find("#include", p + 1)) {
      insert_at = src.find('\n', p) + 1;
    }
    std::string block;
    for (const auto& m : missing) block += m + "\n";
    src.insert(insert_at, block);
  }
  return "```c\n" + src + "```\n";
}

std::string generate_seeds(const std::string& user) {
  std::string out = "hex:00ff\nstr:\"key=value\"\nstr:\"a=1\\nb=22\\n\"\nhex:deadbeef00\n";
  static const std::regex kName(R"((\w+)\()");
  std::smatch m;
  const std::string sigs = section(user, "API signatures:\n", "\n\nGenerate");
  if (std::regex_search(sigs, m, kName)) out += "str:\"" + std::string(m[1]) + "\"\n";
  return out;
}

std::string mutate(const std::string& user) {
  const auto current = comma_list(field(user, "Current API combination: "));
  const auto known = comma_list(field(user, "Known library APIs: "));
  static const std::regex kKeep(R"(keeping (\w+)\. Output at most (\d+))");
  std::smatch m;
  std::string target = current.empty() ? "" : current.front();
  std::size_t max_len = 6;
  if (std::regex_search(user, m, kKeep)) {
    target = m[1];
    max_len = std::stoul(m[2]);
  }
  std::vector<std::string> low;
  static const std::regex kLow(R"(^\d+\. (\w+))");
  for (const auto& line : text::split_lines(section(user, "first):\n", "Combinations already tried"))) {
    std::smatch lm;
    if (std::regex_search(line, lm, kLow)) low.push_back(lm[1]);
  }
  const std::string tried = field(user, "Combinations already tried without reaching new code: ");
  const std::size_t tried_count = static_cast<std::size_t>(std::count(tried.begin(), tried.end(), '['));
  if (!low.empty()) std::rotate(low.begin(), low.begin() + static_cast<long>(tried_count % low.size()), low.end());
  std::vector<std::string> names{target};
  for (const auto& l : low) push_unique(names, l);
  for (const auto& c : current) push_unique(names, c);
  std::vector<std::string> kept;
  for (const auto& n : names) {
    if (std::find(known.begin(), known.end(), n) != known.end()) kept.push_back(n);
  }
  if (kept.size() > max_len) kept.resize(max_len);
  return text::join(kept, "\n") + "\n";
}

std::string top_function(const std::string& user) {
  static const std::regex kTop(R"(#0 (\S+))");
  std::smatch m;
  return std::regex_search(user, m, kTop) ? std::string(m[1]) : "the crashing function";
}

std::string hypothesize(const std::string& user) {
  const std::string report = field(user, "Report: ");
  const std::string fn = top_function(user);
  auto has = [&](std::string_view w) { return report.find(w) != std::string::npos; };
  if (has("buffer-overflow")) {
    const std::string rw = has("WRITE") ? "writes" : "reads";
    return "- " + fn + " " + rw + " data past the end of the intended buffer\n"
           "- the length used by " + fn + " is not checked against the buffer size\n";
  }
  if (has("use-after-free")) return "- " + fn + " uses memory after it has been freed\n";
  if (has("double-free")) return "- " + fn + " frees the same memory twice\n";
  if (has("SEGV") || has("null")) return "- " + fn + " dereferences a NULL pointer\n";
  if (has("leak")) return "- memory allocated before " + fn + " is never released\n";
  return "The input drives " + fn + " into an invalid memory access.";
}

std::string classify(const std::string& user) {
  const std::string fn = top_function(user);
  const bool library_top = user.find("Library function " + fn + ":") != std::string::npos;
  if (library_top) {
    return "VERDICT: LIBRARY_BUG\nCONFIDENCE: MEDIUM\nRATIONALE: The faulting access happens inside " + fn +
           ", which validates its inputs itself; the driver passes data within the documented contract.\n";
  }
  return "VERDICT: MISUSE\nCONFIDENCE: HIGH\nRATIONALE: The fault is in driver code around " + fn +
         ", so the crash comes from how the driver uses the API.\n";
}

}  // namespace

std::string SyntheticProvider::complete(const ChatRequest& request) {
  const std::string task = task_of(request);
  const std::string& user = last_user(request);
  if (task == "summarize_function") return summarize_function(user);
  if (task == "summarize_file") return summarize_file(user);
  if (task == "combine_initial") return combine_initial(user);
  if (task == "combine_refine") return combine_refine(user);
  if (task == "combine_final") {
    // A corrective retry turn carries no draft; answer from the original final prompt.
    return combine_final(first_user(request));
  }
  if (task == "generate_driver") return generate_driver(first_user(request));
  if (task == "repair_driver") return repair_driver(user);
  if (task == "generate_seeds") return generate_seeds(user);
  if (task == "mutate_combination") return mutate(user);
  if (task == "hypothesize") return hypothesize(user);
  if (task == "classify") return classify(user);
  throw ProviderError("synthetic provider: unknown task '" + task + "'", false);
}

}  // namespace kgfuzz
