#include "kgfuzz/fuzz/campaign.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/parallel.hpp"
#include "kgfuzz/fuzz/dataflow.hpp"
#include "kgfuzz/fuzz/seeds.hpp"
#include "kgfuzz/repair/repair_engine.hpp"

namespace kgfuzz {
namespace {

struct DriverEntry {
  explicit DriverEntry(FuzzDriver d) : driver(std::move(d)) {}

  FuzzDriver driver;
  std::string parent;
  std::string fuzz = "not-compiled";
  std::string error;
  std::size_t seeds = 0;
  std::vector<CoverageReport> runs;
  std::vector<RawCrash> crashes;
  json mutation;  // null unless the mutation loop ran for this driver
};

class Workspace {
 public:
  Workspace(const CampaignSettings& s, CampaignContext& ctx, std::vector<std::string>* warnings)
      : s_(s), ctx_(ctx), warnings_(warnings) {}

  void warn(std::string w) {
    std::lock_guard lock(mu_);
    if (warnings_) warnings_->push_back(std::move(w));
  }

  // Seeds, one fuzz run, coverage and crash files. Runs concurrently for distinct drivers.
  void fuzz_one(DriverEntry& e, std::uint64_t timestamp) {
    const FuzzDriver& d = e.driver;
    std::vector<std::string> sigs;
    for (const auto& api : d.combination.apis) {
      const FunctionNode* n = ctx_.graph.api_node(api);
      if (n) sigs.push_back(n->signature);
    }
    std::vector<std::string> w;
    const auto facts = extract_dataflow(d.source, sigs, &w);
    const auto seeds = init_input_bank(d, facts, ctx_.llm, ctx_.prompts, s_.max_seeds, &w);
    for (auto& x : w) warn(std::move(x));
    const auto corpus = s_.out_dir / "corpus" / d.driver_id;
    write_corpus(seeds, corpus);
    e.seeds = seeds.size();

    FuzzRunRequest req{&d, driver_binary_path(s_.build_dir, d), corpus, s_.out_dir / "crashes" / d.driver_id / "artifacts",
                       s_.time_budget_seconds};
    FuzzRunResult r = ctx_.fuzzer.run(req);
    r.coverage.timestamp = timestamp;
    const std::size_t n = e.runs.size();
    write_json_file(s_.out_dir / "cov" / d.driver_id / (std::to_string(n) + ".json"), to_json(r.coverage));
    for (auto& c : r.crashes) {
      c.driver_id = d.driver_id;
      const std::size_t k = e.crashes.size();
      write_json_file(s_.out_dir / "crashes" / d.driver_id / ("crash-" + std::to_string(k) + ".json"), to_json(c));
      e.crashes.push_back(std::move(c));
    }
    e.runs.push_back(std::move(r.coverage));
    e.fuzz = "fuzzed";
  }

 private:
  const CampaignSettings& s_;
  CampaignContext& ctx_;
  std::vector<std::string>* warnings_;
  std::mutex mu_;
};

json entry_json(const DriverEntry& e) {
  json runs = json::array();
  for (std::size_t i = 0; i < e.runs.size(); ++i) {
    runs.push_back({{"n", i}, {"covered", e.runs[i].covered()}, {"total", e.runs[i].total()}, {"timestamp", e.runs[i].timestamp}});
  }
  json crash_ids = json::array();
  for (const auto& c : e.crashes) {
    try {
      crash_ids.push_back(parse_crash(c).crash_id);
    } catch (const Error&) {
      crash_ids.push_back("unparseable");
    }
  }
  json j = {{"driver_id", e.driver.driver_id},
            {"target_api", e.driver.combination.target_api},
            {"apis", e.driver.combination.apis},
            {"generation", e.driver.combination.generation},
            {"status", to_string(e.driver.status)},
            {"repair_iterations_used", e.driver.repair_iterations_used},
            {"parent", e.parent},
            {"fuzz", e.fuzz},
            {"seeds", e.seeds},
            {"runs", runs},
            {"crash_ids", crash_ids}};
  if (!e.error.empty()) j["error"] = e.error;
  if (!e.mutation.is_null()) j["mutation"] = e.mutation;
  return j;
}

}  // namespace

json run_campaign(std::vector<FuzzDriver> drivers, CampaignContext& ctx, const CampaignSettings& s,
                  std::vector<std::string>* warnings) {
  std::sort(drivers.begin(), drivers.end(), [](const FuzzDriver& a, const FuzzDriver& b) { return a.driver_id < b.driver_id; });
  Workspace ws(s, ctx, warnings);

  std::vector<DriverEntry> entries;
  for (auto& d : drivers) entries.emplace_back(std::move(d));
  const bool any_compiled = std::any_of(entries.begin(), entries.end(),
                                        [](const DriverEntry& e) { return e.driver.status == DriverStatus::Compiled; });

  std::string status = "ok";
  if (!any_compiled) status = "nothing-to-run";
  else if (s.time_budget_seconds <= 0) status = "budget-zero";

  // Phase 1.
  std::vector<std::size_t> runnable;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].driver.status != DriverStatus::Compiled) continue;
    if (s.time_budget_seconds <= 0) {
      entries[i].fuzz = "skipped";
      continue;
    }
    runnable.push_back(i);
  }
  parallel_for(runnable.size(), s.workers, [&](std::size_t k) {
    DriverEntry& e = entries[runnable[k]];
    try {
      ws.fuzz_one(e, k + 1);
    } catch (const Error& err) {
      e.fuzz = "failed";
      e.error = std::string(to_string(err.code()));
      ws.warn(e.driver.driver_id + ": fuzz run failed: " + err.what());
    }
  });
  std::uint64_t clock = runnable.size();

  CoverageReport campaign;
  for (const auto i : runnable) {
    for (const auto& r : entries[i].runs) campaign = merge_max(campaign, r);
  }
  campaign.timestamp = 0;
  json trajectory = json::array();
  {
    CoverageReport acc = campaign;
    for (auto& [p, c] : acc.per_file) c.covered = 0;
    for (const auto i : runnable) {
      for (const auto& r : entries[i].runs) {
        acc = merge_max(acc, project_onto(r, acc));
        trajectory.push_back({{"timestamp", r.timestamp}, {"driver_id", entries[i].driver.driver_id}, {"covered", acc.covered()}, {"total", acc.total()}});
      }
    }
  }

  // Phase 2.
  if (s.mutation_budget > 0) {
    const std::size_t originals = entries.size();
    for (std::size_t i = 0; i < originals; ++i) {
      if (entries[i].fuzz != "fuzzed") continue;
      json mj = {{"iterations", 0}, {"found_new_path", false}, {"low_coverage_apis", json::array()}};
      LowCoverage low;
      try {
        low = analyze_file_coverage(campaign, ctx.graph);
      } catch (const Error& err) {
        if (err.code() != Errc::EmptyReport) throw;
        mj["skipped"] = "empty coverage";
        entries[i].mutation = mj;
        continue;
      }
      mj["low_coverage_apis"] = low.apis;
      MutationState state;
      state.combination = entries[i].driver.combination;
      state.budget = s.mutation_budget;
      const std::string parent = entries[i].driver.driver_id;
      CandidateEvaluator evaluate = [&](const ApiCombination& candidate) -> std::optional<CoverageReport> {
        DriverEntry child(ctx.build_driver(candidate));
        child.parent = parent;
        save_driver(child.driver, s.out_dir / "drivers");
        std::optional<CoverageReport> cov;
        if (child.driver.status == DriverStatus::Compiled) {
          try {
            ws.fuzz_one(child, ++clock);
            cov = child.runs.back();
          } catch (const Error& err) {
            if (err.code() == Errc::CompilerUnavailable) throw;
            child.fuzz = "failed";
            child.error = std::string(to_string(err.code()));
            ws.warn(child.driver.driver_id + ": fuzz run failed: " + err.what());
          }
        }
        if (cov) {
          campaign = merge_max(campaign, project_onto(*cov, campaign));
          trajectory.push_back({{"timestamp", cov->timestamp}, {"driver_id", child.driver.driver_id}, {"covered", campaign.covered()}, {"total", campaign.total()}});
        }
        entries.push_back(std::move(child));
        return cov;
      };
      // Detection compares against the coverage before this driver's loop.
      const CoverageReport baseline = campaign;
      std::vector<std::string> w;
      const ApiCombination final_combo =
          mutate_combination(state, low.apis, baseline, ctx.llm, ctx.prompts, ctx.graph, evaluate, s.max_combination_len, &w);
      for (auto& x : w) ws.warn(std::move(x));
      mj["iterations"] = state.iterations;
      mj["found_new_path"] = state.found_new_path;
      mj["final_combination"] = final_combo.apis;
      entries[i].mutation = mj;
    }
  }

  // Crash summary across all runs, deduplicated by stack.
  std::vector<RawCrash> all_crashes;
  for (const auto& e : entries) all_crashes.insert(all_crashes.end(), e.crashes.begin(), e.crashes.end());
  std::vector<std::string> w;
  const auto records = dedup_crashes(all_crashes, &w);
  for (auto& x : w) ws.warn(std::move(x));
  json crashes = json::array();
  for (const auto& r : records) {
    crashes.push_back({{"crash_id", r.crash_id}, {"driver_id", r.driver_id}, {"input", r.crashing_input},
                       {"sanitizer", to_string(r.sanitizer)}, {"duplicates", r.duplicates}});
  }

  json driver_list = json::array();
  std::map<std::string, std::size_t> counts;
  for (const auto& e : entries) {
    driver_list.push_back(entry_json(e));
    ++counts[std::string(to_string(e.driver.status))];
  }
  json per_file = json::object();
  for (const auto& [p, c] : campaign.per_file) per_file[p] = {{"covered", c.covered}, {"total", c.total}};

  json report = {{"schema_version", kReportSchemaVersion},
                 {"status", status},
                 {"time_budget_seconds", s.time_budget_seconds},
                 {"mutation_budget", s.mutation_budget},
                 {"drivers", driver_list},
                 {"driver_status_counts", counts},
                 {"coverage", {{"covered", campaign.covered()}, {"total", campaign.total()}, {"per_file", per_file}}},
                 {"trajectory", trajectory},
                 {"crashes", crashes}};
  write_json_file(s.out_dir / "report.json", report);
  return report;
}

std::vector<RawCrash> load_raw_crashes(const std::filesystem::path& out_dir) {
  std::vector<RawCrash> out;
  const auto root = out_dir / "crashes";
  std::error_code ec;
  if (!std::filesystem::is_directory(root, ec)) return out;
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    std::vector<std::pair<long, std::filesystem::path>> files;
    for (const auto& e : std::filesystem::directory_iterator(d)) {
      const std::string name = e.path().filename().string();
      if (!e.is_regular_file() || !name.starts_with("crash-") || !name.ends_with(".json")) continue;
      files.emplace_back(std::stol(name.substr(6, name.size() - 11)), e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& [n, f] : files) out.push_back(raw_crash_from_json(read_json_file(f)));
  }
  return out;
}

}  // namespace kgfuzz
