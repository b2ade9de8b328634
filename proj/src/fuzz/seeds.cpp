#include "kgfuzz/fuzz/seeds.hpp"

#include <algorithm>
#include <fstream>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/hash.hpp"
#include "kgfuzz/common/io.hpp"
#include "kgfuzz/common/text.hpp"
#include "kgfuzz/llm/gateway.hpp"
#include "kgfuzz/llm/prompts.hpp"

namespace kgfuzz {

std::string_view to_string(SeedProvenance p) noexcept {
  switch (p) {
    case SeedProvenance::LlmGenerated: return "LlmGenerated";
    case SeedProvenance::Fallback: return "Fallback";
    case SeedProvenance::FuzzerCorpus: return "FuzzerCorpus";
  }
  return "?";
}

SeedInput make_seed(std::string bytes, SeedProvenance provenance) {
  SeedInput s;
  s.seed_id = sha256_hex(bytes).substr(0, 16);
  s.bytes = std::move(bytes);
  s.provenance = provenance;
  return s;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::optional<std::string> unescape_c(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') return std::nullopt;  // unescaped quote inside the literal
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i >= s.size()) return std::nullopt;
    const char c = s[i];
    switch (c) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case 'a': out += '\a'; break;
      case 'b': out += '\b'; break;
      case 'f': out += '\f'; break;
      case 'v': out += '\v'; break;
      case '\\': out += '\\'; break;
      case '"': out += '"'; break;
      case '\'': out += '\''; break;
      case '?': out += '?'; break;
      case 'x': {
        int v = 0, n = 0;
        while (n < 2 && i + 1 < s.size() && hex_value(s[i + 1]) >= 0) v = v * 16 + hex_value(s[++i]), ++n;
        if (n == 0) return std::nullopt;
        out += static_cast<char>(v);
        break;
      }
      default:
        if (c >= '0' && c <= '7') {
          int v = c - '0', n = 1;
          while (n < 3 && i + 1 < s.size() && s[i + 1] >= '0' && s[i + 1] <= '7') v = v * 8 + (s[++i] - '0'), ++n;
          if (v > 255) return std::nullopt;
          out += static_cast<char>(v);
        } else {
          return std::nullopt;
        }
    }
  }
  return out;
}

}  // namespace

std::optional<std::string> parse_seed_literal(std::string_view line) {
  line = text::trim(line);
  if (line.starts_with("hex:")) {
    std::string digits;
    for (char c : line.substr(4)) {
      if (c == ' ' || c == '\t') continue;
      if (hex_value(c) < 0) return std::nullopt;
      digits += c;
    }
    if (digits.size() % 2 != 0) return std::nullopt;
    std::string out;
    for (std::size_t i = 0; i < digits.size(); i += 2) {
      out += static_cast<char>(hex_value(digits[i]) * 16 + hex_value(digits[i + 1]));
    }
    return out;
  }
  if (line.starts_with("str:")) {
    auto body = text::trim(line.substr(4));
    if (body.size() < 2 || body.front() != '"' || body.back() != '"') return std::nullopt;
    return unescape_c(body.substr(1, body.size() - 2));
  }
  return std::nullopt;
}

std::vector<SeedInput> fallback_seeds() {
  std::string patterned(256, '\0');
  for (int i = 0; i < 256; ++i) patterned[i] = static_cast<char>(i & 0xFF);
  return {make_seed("", SeedProvenance::Fallback), make_seed(std::string(1, '\0'), SeedProvenance::Fallback),
          make_seed(patterned, SeedProvenance::Fallback)};
}

std::vector<SeedInput> init_input_bank(const FuzzDriver& driver, const DataFlowFacts& facts, LlmGateway& llm,
                                       const PromptTemplates& prompts, std::size_t max_seeds,
                                       std::vector<std::string>* warnings) {
  std::vector<SeedInput> seeds;
  auto add = [&](SeedInput s) {
    auto same = [&](const SeedInput& o) { return o.seed_id == s.seed_id; };
    if (std::none_of(seeds.begin(), seeds.end(), same)) seeds.push_back(std::move(s));
  };
  auto req = ChatRequest::make(
      LlmRole::Chat,
      {{"system", prompts.get("seeds.system")},
       {"user", prompts.render("seeds.user", {{"source", driver.source},
                                              {"dataflow", format_dataflow(facts)},
                                              {"signatures", facts.api_signatures.empty() ? "(none)" : text::join(facts.api_signatures, "\n")},
                                              {"max_seeds", std::to_string(max_seeds)}})}});
  try {
    const std::string answer = llm.complete(req);
    std::size_t taken = 0;
    for (const auto& raw : text::split_lines(answer)) {
      const auto line = text::trim(raw);
      if (line.empty() || line.starts_with("```")) continue;
      auto bytes = parse_seed_literal(line);
      if (!bytes) {
        if (warnings) warnings->push_back(driver.driver_id + ": malformed seed line skipped: " + std::string(line));
        continue;
      }
      if (taken++ >= max_seeds) break;
      add(make_seed(std::move(*bytes), SeedProvenance::LlmGenerated));
    }
  } catch (const Error& e) {
    if (!is_llm_error(e)) throw;
    if (warnings) warnings->push_back(driver.driver_id + ": seed generation failed, fallback seeds only: " + e.what());
  }
  for (auto& s : fallback_seeds()) add(std::move(s));
  return seeds;
}

void write_corpus(const std::vector<SeedInput>& seeds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, dir.string() + ": " + ec.message());
  for (const auto& s : seeds) write_text_file(dir / s.seed_id, s.bytes);
}

std::vector<SeedInput> read_corpus(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SeedInput> out;
  for (const auto& f : files) {
    SeedInput s{f.filename().string(), read_text_file(f), SeedProvenance::FuzzerCorpus};
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace kgfuzz
