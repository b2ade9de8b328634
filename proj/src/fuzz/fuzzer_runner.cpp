#include "kgfuzz/fuzz/fuzzer_runner.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <regex>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/text.hpp"
#include "kgfuzz/fuzz/seeds.hpp"

namespace kgfuzz {

ScriptedFuzzerRunner::ScriptedFuzzerRunner(json script) : script_(std::move(script)) {
  if (!script_.contains("sequence") && !script_.contains("files")) {
    throw Error(Errc::ConfigError, "fuzzer script needs \"files\" or \"sequence\"");
  }
}

FuzzRunResult ScriptedFuzzerRunner::run(const FuzzRunRequest& req) {
  std::size_t step;
  {
    std::lock_guard lock(mu_);
    step = runs_++;
  }
  FuzzRunResult res;
  const std::string driver_id = req.driver ? req.driver->driver_id : "";
  std::string input_id = "none";
  if (!req.corpus_dir.empty() && std::filesystem::is_directory(req.corpus_dir)) {
    auto corpus = read_corpus(req.corpus_dir);
    if (!corpus.empty()) input_id = corpus.front().seed_id;
  }

  if (script_.contains("sequence")) {
    const auto& seq = script_.at("sequence");
    if (seq.empty()) return res;
    const auto& s = seq.at(std::min(step, seq.size() - 1));
    for (const auto& [path, c] : s.at("per_file").items()) {
      res.coverage.per_file[path] = {c.at("covered").get<std::uint64_t>(), c.at("total").get<std::uint64_t>()};
    }
    for (const auto& r : s.value("crashes", json::array())) res.crashes.push_back({driver_id, input_id, r.get<std::string>()});
  } else {
    const std::vector<std::string> apis = req.driver ? req.driver->combination.apis : std::vector<std::string>{};
    const auto& branches = script_.value("api_branches", json::object());
    for (const auto& [path, total] : script_.at("files").items()) {
      std::uint64_t covered = 0;
      for (const auto& api : apis) {
        if (branches.contains(api) && branches[api].contains(path)) covered += branches[api][path].get<std::uint64_t>();
      }
      res.coverage.per_file[path] = {std::min(covered, total.get<std::uint64_t>()), total.get<std::uint64_t>()};
    }
    for (const auto& c : script_.value("crashes", json::array())) {
      const std::string when = c.at("when_api");
      if (std::find(apis.begin(), apis.end(), when) != apis.end()) {
        res.crashes.push_back({driver_id, input_id, c.at("report").get<std::string>()});
      }
    }
  }
  res.exit_status = res.crashes.empty() ? 0 : 1;
  validate_report(res.coverage);
  return res;
}

std::vector<std::string> split_sanitizer_reports(const std::string& output) {
  static const std::regex kStart(R"(^==\d+==\s*(ERROR|WARNING): \w+Sanitizer)");
  static const std::regex kUbsan(R"(^\S+:\d+:\d+: runtime error:)");
  std::vector<std::string> reports;
  std::string cur;
  bool in = false;
  for (const auto& line : text::split_lines(output)) {
    const bool start = std::regex_search(line, kStart) || std::regex_search(line, kUbsan);
    if (start) {
      if (in) reports.push_back(cur);
      cur.clear();
      in = true;
    }
    if (!in) continue;
    cur += line + "\n";
    if (line.starts_with("SUMMARY:")) {
      reports.push_back(cur);
      cur.clear();
      in = false;
    }
  }
  if (in && !cur.empty()) reports.push_back(cur);
  return reports;
}

namespace {

std::string shell_quote(const std::string& s) { return "'" + text::replace_all(s, "'", "'\\''") + "'"; }

std::pair<int, std::string> run_shell(const std::string& cmd) {
  FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) throw Error(Errc::IoError, "cannot start: " + cmd);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

FuzzRunResult LibFuzzerRunner::run(const FuzzRunRequest& req) {
  std::error_code ec;
  std::filesystem::create_directories(req.artifact_dir, ec);
  const std::vector<std::pair<std::string, std::string>> vars = {
      {"binary", shell_quote(req.binary.string())},
      {"corpus", shell_quote(req.corpus_dir.string())},
      {"artifacts", shell_quote(req.artifact_dir.string())},
      {"seconds", std::to_string(req.time_budget_seconds)}};
  auto [status, output] = run_shell(text::render_command(config_.run_template, vars));
  FuzzRunResult res;
  res.exit_status = status;

  static const std::regex kUnit(R"(Test unit written to (\S+))");
  std::vector<std::string> units;
  for (std::sregex_iterator it(output.begin(), output.end(), kUnit), end; it != end; ++it) {
    units.push_back(std::string(text::basename((*it)[1].str())));
  }
  const auto reports = split_sanitizer_reports(output);
  const std::string driver_id = req.driver ? req.driver->driver_id : "";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    res.crashes.push_back({driver_id, i < units.size() ? units[i] : (units.empty() ? "unknown" : units.back()), reports[i]});
  }

  if (!config_.coverage_template.empty()) {
    auto [cstatus, cov] = run_shell(text::render_command(config_.coverage_template, vars));
    if (cstatus != 0) throw Error(Errc::IoError, "coverage export failed: " + cov);
    try {
      res.coverage = coverage_from_llvm_export(json::parse(cov), config_.project_root);
    } catch (const json::exception& e) {
      throw Error(Errc::ParseFailure, std::string("coverage export is not JSON: ") + e.what());
    }
  }
  return res;
}

}  // namespace kgfuzz
