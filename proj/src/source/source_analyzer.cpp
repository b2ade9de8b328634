#include "kgfuzz/source/source_analyzer.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/glob.hpp"
#include "kgfuzz/common/text.hpp"
#include "kgfuzz/source/c_lexer.hpp"

namespace kgfuzz {
namespace {

using c::Token;
using c::TokenKind;

bool is_word(const Token& t) { return t.kind != TokenKind::Punct; }

std::string render_tokens(const std::vector<Token>& toks) {
  std::string out;
  const Token* prev = nullptr;
  for (const auto& t : toks) {
    if (prev) {
      const bool space = (is_word(*prev) && is_word(t)) || (is_word(*prev) && (t.is("*") || t.is("("))) ||
                         prev->is(",");
      if (space) out.push_back(' ');
    }
    out += t.text;
    prev = &t;
  }
  return out;
}

std::vector<std::vector<Token>> split_params(const std::vector<Token>& toks) {
  std::vector<std::vector<Token>> params(1);
  int depth = 0;
  for (const auto& t : toks) {
    if (t.is("(") || t.is("[") || t.is("{")) ++depth;
    if (t.is(")") || t.is("]") || t.is("}")) --depth;
    if (depth == 0 && t.is(",")) {
      params.emplace_back();
      continue;
    }
    params.back().push_back(t);
  }
  if (params.size() == 1 && params.front().empty()) params.clear();
  return params;
}

// Index of the parameter-name token within one parameter's tokens, or npos.
std::size_t param_name_index(const std::vector<Token>& p) {
  constexpr auto npos = std::string::npos;
  if (p.size() < 2) return npos;
  for (std::size_t k = 0; k + 3 < p.size(); ++k) {
    // function pointer: ( * name )
    if (p[k].is("(") && p[k + 1].is("*") && p[k + 2].is_ident() && p[k + 3].is(")")) {
      return k + 2;
    }
  }
  for (const auto& t : p) {
    if (t.is("(")) return npos;  // abstract function-pointer declarator
  }
  std::size_t last = p.size() - 1;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].is("[")) {
      last = k == 0 ? npos : k - 1;
      break;
    }
  }
  if (last == npos || last == 0) return npos;
  const Token& cand = p[last];
  if (!cand.is_ident() || c::is_keyword(cand.text) || c::is_type_keyword(cand.text)) return npos;
  const Token& before = p[last - 1];
  if (before.is("struct") || before.is("union") || before.is("enum")) return npos;
  return last;
}

std::vector<std::string> param_names(const std::vector<Token>& param_tokens) {
  std::vector<std::string> names;
  for (const auto& p : split_params(param_tokens)) {
    auto k = param_name_index(p);
    if (k != std::string::npos) names.push_back(p[k].text);
  }
  return names;
}

std::string normalize_param_tokens(const std::vector<Token>& toks) {
  std::vector<std::string> parts;
  for (auto p : split_params(toks)) {
    auto k = param_name_index(p);
    if (k != std::string::npos) p.erase(p.begin() + static_cast<std::ptrdiff_t>(k));
    parts.push_back(render_tokens(p));
  }
  return text::join(parts, ", ");
}

bool is_storage_word(std::string_view w) {
  return w == "static" || w == "extern" || w == "inline" || w == "__inline" || w == "__inline__" ||
         w == "register" || w == "_Noreturn" || w == "__extension__";
}

std::size_t matching_open_backward(const std::vector<Token>& toks, std::size_t close) {
  int depth = 0;
  for (std::size_t k = close + 1; k-- > 0;) {
    if (toks[k].kind != TokenKind::Punct) continue;
    if (toks[k].is(")")) ++depth;
    else if (toks[k].is("(") && --depth == 0) return k;
  }
  return toks.size();
}

}  // namespace

std::string normalize_params(std::string_view params) {
  std::string_view inner = text::trim(params);
  if (!inner.empty() && inner.front() == '(') inner.remove_prefix(1);
  if (!inner.empty() && inner.back() == ')') inner.remove_suffix(1);
  return normalize_param_tokens(c::lex(inner).tokens);
}

ParsedFile parse_source_text(std::string_view file_path, std::string_view src) {
  auto lexed = c::lex(src);
  const auto& T = lexed.tokens;
  ParsedFile out;
  out.function_like_macros = c::function_like_macros(lexed.directives);

  std::size_t stmt_start = 0;
  std::size_t i = 0;
  while (i < T.size()) {
    const Token& t = T[i];
    if (t.kind == TokenKind::Punct) {
      if (t.is(";")) {
        stmt_start = i + 1;
      } else if (t.is("(") || t.is("[")) {
        auto close = c::matching_close(T, i);
        if (close == T.size()) {
          throw Error(Errc::ParseFailure, "unbalanced '" + t.text + "' at line " + std::to_string(t.line));
        }
        i = close + 1;
        continue;
      } else if (t.is(")") || t.is("]") || t.is("}")) {
        throw Error(Errc::ParseFailure, "unexpected '" + t.text + "' at line " + std::to_string(t.line));
      } else if (t.is("{")) {
        auto close = c::matching_close(T, i);
        if (close == T.size()) {
          throw Error(Errc::ParseFailure, "unbalanced '{' at line " + std::to_string(t.line));
        }
        bool is_def = false;
        if (i > 0 && T[i - 1].is(")")) {
          const std::size_t open = matching_open_backward(T, i - 1);
          if (open != T.size() && open > stmt_start && T[open - 1].is_ident() &&
              !c::is_keyword(T[open - 1].text)) {
            const std::size_t name_at = open - 1;
            std::size_t spec_begin = stmt_start;
            for (std::size_t k = stmt_start; k < name_at; ++k) {
              if (T[k].is(")") || T[k].is("]") || T[k].is("}")) spec_begin = k + 1;
            }
            bool ok = spec_begin < name_at;
            for (std::size_t k = spec_begin; ok && k < name_at; ++k) {
              ok = (T[k].is_ident() && !T[k].is("typedef")) || T[k].is("*");
            }
            if (ok) {
              std::vector<Token> ret;
              bool file_local = false;
              for (std::size_t k = spec_begin; k < name_at; ++k) {
                if (T[k].is("static")) file_local = true;
                if (!is_storage_word(T[k].text)) ret.push_back(T[k]);
              }
              if (!ret.empty()) {
                std::vector<Token> params(T.begin() + static_cast<std::ptrdiff_t>(open + 1),
                                          T.begin() + static_cast<std::ptrdiff_t>(i - 1));
                SourceFunction fn;
                fn.name = T[name_at].text;
                std::string rt = render_tokens(ret);
                fn.signature = rt + (ret.back().is("*") ? "" : " ") + fn.name + "(" +
                               normalize_param_tokens(params) + ")";
                fn.file_path = std::string(file_path);
                fn.source_text = std::string(src.substr(T[spec_begin].begin, T[close].end - T[spec_begin].begin));
                fn.line_span = {T[spec_begin].line, T[close].line};
                fn.is_file_local = file_local;
                out.functions.push_back(std::move(fn));
                is_def = true;
              }
            }
          }
        }
        if (is_def) stmt_start = close + 1;
        i = close + 1;
        continue;
      }
    }
    ++i;
  }
  return out;
}

SourceModel parse_repository(const std::filesystem::path& root,
                             const std::vector<std::string>& include_globs) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(Errc::RootNotFound, root.string());

  SourceModel model;
  std::vector<std::string> matched;
  std::size_t c_files_seen = 0;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw Error(Errc::RootNotFound, root.string() + ": " + ec.message());
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    const auto& entry = *it;
    const std::string fname = entry.path().filename().string();
    if (entry.is_directory(ec) && !fname.empty() && fname.front() == '.') {
      it.disable_recursion_pending();
      continue;
    }
    if (!entry.is_regular_file(ec)) continue;
    const auto ext = entry.path().extension().string();
    if (ext != ".c" && ext != ".h") continue;
    ++c_files_seen;
    const std::string rel = fs::relative(entry.path(), root, ec).generic_string();
    bool keep = include_globs.empty();
    for (const auto& g : include_globs) {
      if (glob_match(g, rel)) {
        keep = true;
        break;
      }
    }
    if (keep) matched.push_back(rel);
    else model.warnings.push_back("skipped (not matched by include globs): " + rel);
  }
  if (c_files_seen > 0 && matched.empty()) {
    throw Error(Errc::NoSourceFiles, "no .c/.h file under " + root.string() + " matches the include globs");
  }
  std::sort(matched.begin(), matched.end());

  std::set<std::string> macros;
  for (const auto& rel : matched) {
    ParsedFile parsed;
    try {
      parsed = parse_source_text(rel, read_text_file(root / rel));
    } catch (const Error& e) {
      model.warnings.push_back("skipped (unparseable) " + rel + ": " + e.detail());
      continue;
    }
    model.files.push_back(rel);
    macros.insert(parsed.function_like_macros.begin(), parsed.function_like_macros.end());
    std::set<std::string> seen;
    for (auto& fn : parsed.functions) {
      if (!seen.insert(fn.name).second) {
        model.warnings.push_back("duplicate definition of " + fn.name + " in " + rel + " ignored");
        continue;
      }
      model.functions.push_back(std::move(fn));
    }
  }
  model.function_like_macros.assign(macros.begin(), macros.end());

  std::map<std::string, std::vector<std::string>> defs;
  for (const auto& fn : model.functions) defs[fn.name].push_back(fn.file_path);
  for (const auto& [name, files] : defs) {
    if (files.size() > 1) {
      model.warnings.push_back("name collision: " + name + " defined in " + text::join(files, ", "));
    }
  }
  model.calls = extract_calls(model, &model.warnings);
  return model;
}

std::vector<CallEdgeRaw> extract_calls(const SourceModel& model, std::vector<std::string>* warnings) {
  std::map<std::string, std::vector<std::string>> defs;
  for (const auto& fn : model.functions) defs[fn.name].push_back(fn.file_path);
  const std::set<std::string> macros(model.function_like_macros.begin(), model.function_like_macros.end());
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };

  std::set<CallEdgeRaw> edges;
  for (const auto& fn : model.functions) {
    std::vector<Token> T;
    try {
      T = c::lex(fn.source_text).tokens;
    } catch (const Error&) {
      continue;
    }
    std::size_t name_at = T.size();
    for (std::size_t k = 0; k + 1 < T.size(); ++k) {
      if (T[k].is(fn.name) && T[k + 1].is("(")) {
        name_at = k;
        break;
      }
    }
    if (name_at == T.size()) continue;
    const std::size_t params_close = c::matching_close(T, name_at + 1);
    std::size_t body = params_close;
    while (body < T.size() && !T[body].is("{")) ++body;
    if (body >= T.size()) continue;

    std::set<std::string> indirect_names;
    {
      std::vector<Token> params(T.begin() + static_cast<std::ptrdiff_t>(name_at + 2),
                                T.begin() + static_cast<std::ptrdiff_t>(params_close));
      for (auto& p : param_names(params)) indirect_names.insert(std::move(p));
    }
    for (std::size_t k = body; k + 3 < T.size(); ++k) {
      if (T[k].is("(") && T[k + 1].is("*") && T[k + 2].is_ident() && T[k + 3].is(")")) {
        indirect_names.insert(T[k + 2].text);
      }
    }

    for (std::size_t k = body + 1; k + 1 < T.size(); ++k) {
      const Token& t = T[k];
      if (t.is(")") && T[k + 1].is("(")) {
        const std::size_t open = matching_open_backward(T, k);
        if (open + 1 < k && T[open + 1].is("*")) {
          warn("indirect call through function pointer in " + fn.name + " (" + fn.file_path + ":" +
               std::to_string(t.line + fn.line_span.start - 1) + ") omitted");
        }
        continue;
      }
      if (!t.is_ident() || !T[k + 1].is("(") || c::is_keyword(t.text)) continue;
      if (macros.count(t.text)) continue;
      if (T[k - 1].is(".") || T[k - 1].is("->")) {
        warn("indirect call via member " + t.text + " in " + fn.name + " omitted");
        continue;
      }
      if (indirect_names.count(t.text)) {
        warn("indirect call through " + t.text + " in " + fn.name + " omitted");
        continue;
      }
      CallEdgeRaw e{fn.name, fn.file_path, t.text, "", CallKind::External};
      auto found = defs.find(t.text);
      if (found != defs.end()) {
        const auto& files = found->second;
        if (std::find(files.begin(), files.end(), fn.file_path) != files.end()) {
          e.callee_file = fn.file_path;
        } else if (files.size() == 1) {
          e.callee_file = files.front();
        } else {
          warn("ambiguous call " + fn.name + " -> " + t.text + " dropped (" + text::join(files, ", ") + ")");
          continue;
        }
        e.kind = CallKind::Internal;
      }
      edges.insert(std::move(e));
    }
  }
  return {edges.begin(), edges.end()};
}

std::vector<ApiSpec> parse_api_list(std::string_view content) {
  std::vector<ApiSpec> out;
  std::set<std::string> names;
  const auto lines = text::split_lines(content);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = text::trim(lines[n]);
    if (line.empty() || line.front() == '#') continue;
    auto fields = text::split(lines[n], '\t');
    if (fields.size() != 3) throw Error(Errc::MalformedLine, std::to_string(n + 1));
    ApiSpec spec{std::string(text::trim(fields[0])), std::string(text::trim(fields[1])),
                 std::string(text::trim(fields[2]))};
    if (spec.name.empty() || spec.header.empty() || spec.signature.empty()) {
      throw Error(Errc::MalformedLine, std::to_string(n + 1));
    }
    if (!names.insert(spec.name).second) throw Error(Errc::DuplicateApi, spec.name);
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<ApiSpec> load_api_list(const std::filesystem::path& path) {
  return parse_api_list(read_text_file(path));
}

}  // namespace kgfuzz
