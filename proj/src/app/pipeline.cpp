#include "kgfuzz/app/pipeline.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <fstream>
#include <map>

#include "kgfuzz/combiner/api_combiner.hpp"
#include "kgfuzz/common/error.hpp"
#include "kgfuzz/common/parallel.hpp"
#include "kgfuzz/driver/driver_factory.hpp"
#include "kgfuzz/fuzz/campaign.hpp"
#include "kgfuzz/graph/knowledge_graph.hpp"
#include "kgfuzz/graph/summarizer.hpp"
#include "kgfuzz/index/embedder.hpp"
#include "kgfuzz/index/graph_index.hpp"
#include "kgfuzz/llm/gateway.hpp"
#include "kgfuzz/llm/prompts.hpp"
#include "kgfuzz/llm/providers.hpp"
#include "kgfuzz/repair/repair_engine.hpp"
#include "kgfuzz/source/source_analyzer.hpp"
#include "kgfuzz/triage/crash_triage.hpp"

namespace kgfuzz {

namespace fs = std::filesystem;

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::BuildGraph: return "build-graph";
    case Stage::Index: return "index";
    case Stage::Gen: return "gen";
    case Stage::Repair: return "repair";
    case Stage::Fuzz: return "fuzz";
    case Stage::Triage: return "triage";
    case Stage::Report: return "report";
  }
  return "?";
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> kStages = {Stage::BuildGraph, Stage::Index,  Stage::Gen,   Stage::Repair,
                                             Stage::Fuzz,       Stage::Triage, Stage::Report};
  return kStages;
}

std::optional<Stage> stage_from_string(std::string_view s) noexcept {
  for (auto st : all_stages()) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

WorkspaceLock::WorkspaceLock(const fs::path& dir) : path_(dir / artifacts::kLock) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create workspace " + dir.string() + ": " + ec.message());
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      const std::string pid = std::to_string(::getpid()) + "\n";
      const auto written = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      if (written == static_cast<ssize_t>(pid.size())) return;
      fs::remove(path_, ec);
      throw Error(Errc::IoError, "cannot write lock file " + path_.string());
    }
    if (errno != EEXIST) throw Error(Errc::IoError, "cannot create lock file " + path_.string());
    long holder = 0;
    std::ifstream(path_) >> holder;
    if (holder > 0 && (::kill(static_cast<pid_t>(holder), 0) == 0 || errno == EPERM)) {
      throw Error(Errc::IoError, "workspace " + dir.string() + " is locked by process " + std::to_string(holder));
    }
    fs::remove(path_, ec);  // stale: the holder is gone
  }
  throw Error(Errc::IoError, "cannot acquire " + path_.string());
}

WorkspaceLock::~WorkspaceLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

Pipeline::Pipeline(CampaignConfig config, PipelineOptions options, std::ostream& log)
    : config_(std::move(config)), options_(options), log_(log), prompts_(std::make_unique<PromptTemplates>()) {
  if (!config_.prompts_dir.empty()) {
    const auto n = prompts_->load_overrides(config_.prompts_dir);
    log_ << "prompts: " << n << " template(s) overridden from " << config_.prompts_dir.string() << "\n";
  }
}

Pipeline::~Pipeline() = default;

std::size_t Pipeline::workers() const {
  return static_cast<std::size_t>(options_.workers.value_or(config_.workers));
}

void Pipeline::require(const std::string& artifact, Stage producer) const {
  std::error_code ec;
  if (!fs::exists(out(artifact), ec)) {
    throw Error(Errc::MissingArtifact, artifact + " (run the " + std::string(to_string(producer)) + " stage first)");
  }
}

bool Pipeline::fresh(const std::string& artifact) const {
  std::error_code ec;
  return !options_.force && fs::exists(out(artifact), ec);
}

namespace {

std::shared_ptr<LlmProvider> make_provider(const ProviderSettings& p, const CampaignConfig& c,
                                           std::shared_ptr<LlmProvider>& replay) {
  if (p.provider == "mock") {
    if (!replay) {
      std::error_code ec;
      if (!fs::exists(c.transcript, ec)) throw Error(Errc::ConfigError, "llm.transcript not found: " + c.transcript.string());
      replay = std::make_shared<ReplayProvider>(Transcript::load(c.transcript));
    }
    return replay;
  }
  if (p.provider == "synthetic") return std::make_shared<SyntheticProvider>();
  return std::make_shared<HttpChatProvider>(
      HttpProviderConfig{p.endpoint, p.model, p.api_key_env, static_cast<std::uint64_t>(c.rng_seed)});
}

void clear_dir(const fs::path& p) {
  std::error_code ec;
  fs::remove_all(p, ec);
  if (ec) throw Error(Errc::IoError, "cannot remove " + p.string() + ": " + ec.message());
}

std::unique_ptr<CompilerRunner> make_compiler(const CampaignConfig& c) {
  if (c.compiler == "scripted") {
    return std::make_unique<ScriptedCompilerRunner>(ScriptedCompilerRunner::from_json(read_json_file(c.compiler_script)));
  }
  return std::make_unique<CommandCompilerRunner>(CommandCompilerConfig{c.compiler_command, c.compiler_include_dirs});
}

std::unique_ptr<FuzzerRunner> make_fuzzer(const CampaignConfig& c) {
  if (c.fuzzer == "scripted") return std::make_unique<ScriptedFuzzerRunner>(read_json_file(c.fuzzer_script));
  return std::make_unique<LibFuzzerRunner>(LibFuzzerConfig{c.fuzzer_run, c.fuzzer_coverage, c.project_root});
}

}  // namespace

LlmGateway& Pipeline::gateway() {
  if (!gateway_) {
    std::shared_ptr<LlmProvider> replay;
    auto coder = make_provider(config_.coder, config_, replay);
    auto chat = make_provider(config_.chat, config_, replay);
    GatewayConfig gc;
    gc.max_retries = static_cast<int>(config_.max_retries);
    gc.backoff_base = std::chrono::milliseconds(config_.backoff_base_ms);
    gc.backoff_max = std::chrono::milliseconds(config_.backoff_max_ms);
    if (config_.call_cap) gc.call_cap = static_cast<std::size_t>(*config_.call_cap);
    gc.max_concurrent = static_cast<std::size_t>(config_.max_concurrent_llm);
    std::shared_ptr<Transcript> transcript;
    std::error_code ec;
    if (fs::exists(out(artifacts::kTranscript), ec)) {
      transcript = std::make_shared<Transcript>(Transcript::load(out(artifacts::kTranscript)));
    } else {
      transcript = std::make_shared<Transcript>(config_.project_root.filename().string());
    }
    gateway_ = std::make_unique<LlmGateway>(coder, chat, gc, transcript);
  }
  return *gateway_;
}

void Pipeline::save_transcript() {
  if (gateway_) gateway_->transcript().save(out(artifacts::kTranscript));
}

Embedder& Pipeline::embedder() {
  if (!embedder_) {
    const auto dim = static_cast<std::size_t>(config_.embedder_dim);
    if (config_.embedder == "http") {
      embedder_ = std::make_unique<HttpEmbedder>(config_.embedder_endpoint, config_.embedder_model,
                                                 config_.embedder_api_key_env, dim);
    } else {
      embedder_ = std::make_unique<HashEmbedder>(dim);
    }
  }
  return *embedder_;
}

void Pipeline::run(Stage stage) {
  log_ << "== " << to_string(stage) << "\n";
  struct SaveOnExit {
    Pipeline* p;
    ~SaveOnExit() {
      try {
        p->save_transcript();
      } catch (...) {
      }
    }
  } guard{this};
  switch (stage) {
    case Stage::BuildGraph: build_graph_stage(); break;
    case Stage::Index: index_stage(); break;
    case Stage::Gen: gen_stage(); break;
    case Stage::Repair: repair_stage(); break;
    case Stage::Fuzz: fuzz_stage(); break;
    case Stage::Triage: triage_stage(); break;
    case Stage::Report: report_stage(); break;
  }
}

void Pipeline::run_from(Stage first) {
  bool started = false;
  for (auto s : all_stages()) {
    started = started || s == first;
    if (started) run(s);
  }
}

void Pipeline::build_graph_stage() {
  if (fresh(artifacts::kGraph)) {
    log_ << "graph.json exists, skipping (use --force to rebuild)\n";
    return;
  }
  SourceModel model = parse_repository(config_.project_root, config_.include_globs);
  model.api_list = load_api_list(config_.api_list);
  std::vector<std::string> warnings = model.warnings;
  NullSummarizer null_summarizer;
  std::unique_ptr<LlmSummarizer> llm_summarizer;
  Summarizer* summarizer = &null_summarizer;
  if (config_.summarize) {
    llm_summarizer = std::make_unique<LlmSummarizer>(gateway(), *prompts_);
    summarizer = llm_summarizer.get();
  }
  const auto graph = build_graph(model, *summarizer, workers(), &warnings);
  validate_graph(graph);
  for (const auto& a : graph.apis) {
    if (!graph.api_node(a.name)) warnings.push_back("API " + a.name + " has no definition in the repository");
  }
  for (const auto& w : warnings) log_ << "warning: " << w << "\n";
  save_graph(graph, out(artifacts::kGraph));
  log_ << "graph: " << graph.function_nodes().size() << " functions, " << graph.file_nodes().size() << " files, "
       << graph.edges.size() << " edges, " << graph.apis.size() << " APIs\n";
}

void Pipeline::index_stage() {
  require(artifacts::kGraph, Stage::BuildGraph);
  if (fresh(artifacts::kIndexNl) && fresh(artifacts::kIndexCode)) {
    log_ << "indexes exist, skipping (use --force to rebuild)\n";
    return;
  }
  const auto graph = load_graph(out(artifacts::kGraph));
  auto [nl, code] = build_indexes(graph, embedder(), workers());
  save_index(nl, out(artifacts::kIndexNl));
  save_index(code, out(artifacts::kIndexCode));
  log_ << "index: " << nl.size() << " NL chunks, " << code.size() << " code chunks\n";
}

void Pipeline::gen_stage() {
  require(artifacts::kGraph, Stage::BuildGraph);
  require(artifacts::kIndexNl, Stage::Index);
  require(artifacts::kIndexCode, Stage::Index);
  if (fresh(artifacts::kCombinations)) {
    log_ << "combinations.json exists, skipping (use --force to regenerate)\n";
    return;
  }
  clear_dir(out(artifacts::kDrivers));
  const auto graph = load_graph(out(artifacts::kGraph));
  const auto fp = embedder().fingerprint();
  const auto nl = load_index(out(artifacts::kIndexNl), fp);
  const auto code = load_index(out(artifacts::kIndexCode), fp);
  CombinerSettings cs;
  cs.retrieval = {config_.similarity_threshold, static_cast<std::size_t>(config_.top_k)};
  cs.max_combination_len = static_cast<std::size_t>(config_.max_combination_len);

  const std::size_t n = graph.apis.size();
  std::vector<std::optional<FuzzDriver>> drivers(n);
  std::vector<std::optional<ApiCombination>> combos(n);
  std::vector<std::string> failures(n);
  std::vector<std::vector<std::string>> warnings(n);
  auto& llm = gateway();
  parallel_for(n, workers(), [&](std::size_t i) {
    const ApiSpec& api = graph.apis[i];
    try {
      if (!graph.api_node(api.name)) throw Error(Errc::MissingApiNode, api.name);
      combos[i] = query_combination(api, graph, nl, code, cs, embedder(), llm, *prompts_, &warnings[i]);
      auto bundle = build_prompt(*combos[i], graph, *prompts_);
      drivers[i] = try_generate_driver(std::move(bundle), llm, *prompts_);
    } catch (const Error& e) {
      failures[i] = std::string(to_string(e.code())) + ": " + e.detail();
    }
  });

  json combos_json = json::array();
  json failures_json = json::array();
  std::size_t generated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& w : warnings[i]) log_ << "warning: " << w << "\n";
    if (combos[i]) combos_json.push_back(to_json(*combos[i]));
    if (!failures[i].empty()) {
      log_ << "gen " << graph.apis[i].name << " failed: " << failures[i] << "\n";
      failures_json.push_back({{"api", graph.apis[i].name}, {"error", failures[i]}});
    }
    if (drivers[i]) {
      save_driver(*drivers[i], out(artifacts::kDrivers));
      if (drivers[i]->status == DriverStatus::Generated) ++generated;
    }
  }
  write_json_file(out(artifacts::kCombinations), {{"combinations", combos_json}, {"failures", failures_json}});
  log_ << "gen: " << combos_json.size() << " combinations, " << generated << " drivers passed the structural check\n";
}

namespace {

UsageKnowledgeBase initial_kb(const CampaignConfig& c, const CodeKnowledgeGraph& graph) {
  auto samples = header_seed_samples(graph.apis);
  if (!c.kb_seed_dir.empty()) {
    auto more = driver_seed_samples(c.kb_seed_dir, graph.apis);
    samples.insert(samples.end(), more.begin(), more.end());
  }
  return init_kb(samples);
}

}  // namespace

void Pipeline::repair_stage() {
  require(artifacts::kGraph, Stage::BuildGraph);
  require(artifacts::kDrivers, Stage::Gen);
  const auto graph = load_graph(out(artifacts::kGraph));
  UsageKnowledgeBase kb = (!options_.force && fs::exists(out(artifacts::kKb))) ? load_kb(out(artifacts::kKb))
                                                                              : initial_kb(config_, graph);
  auto compiler = make_compiler(config_);
  RepairSettings rs{static_cast<int>(config_.repair_max_iterations), out(artifacts::kBuild)};
  std::size_t compiled = 0, failed = 0;
  // Sequential in driver-id order: each success extends the KB seen by later drivers.
  for (auto& d : load_drivers(out(artifacts::kDrivers))) {
    if (d.status != DriverStatus::Generated) continue;
    auto r = repair_loop(std::move(d), std::move(kb), *compiler, gateway(), *prompts_, rs);
    for (const auto& w : r.warnings) log_ << "warning: " << w << "\n";
    kb = std::move(r.kb);
    save_driver(r.driver, out(artifacts::kDrivers));
    (r.driver.status == DriverStatus::Compiled ? compiled : failed)++;
    log_ << "repair " << r.driver.driver_id << ": " << to_string(r.driver.status) << " after "
         << r.driver.repair_iterations_used << " iteration(s)\n";
  }
  save_kb(kb, out(artifacts::kKb));
  log_ << "repair: " << compiled << " compiled, " << failed << " failed, KB version " << kb.version() << "\n";
}

void Pipeline::fuzz_stage() {
  require(artifacts::kGraph, Stage::BuildGraph);
  require(artifacts::kDrivers, Stage::Gen);
  require(artifacts::kKb, Stage::Repair);
  if (fresh(artifacts::kReport)) {
    log_ << "report.json exists, skipping (use --force to rerun the campaign)\n";
    return;
  }
  for (const char* dir : {artifacts::kCorpus, artifacts::kCov, artifacts::kCrashes}) clear_dir(out(dir));
  const auto graph = load_graph(out(artifacts::kGraph));
  UsageKnowledgeBase kb = load_kb(out(artifacts::kKb));
  std::vector<FuzzDriver> originals;
  for (auto& d : load_drivers(out(artifacts::kDrivers))) {
    if (d.combination.generation == 0) originals.push_back(std::move(d));
  }
  auto compiler = make_compiler(config_);
  auto fuzzer = make_fuzzer(config_);
  RepairSettings rs{static_cast<int>(config_.repair_max_iterations), out(artifacts::kBuild)};
  auto& llm = gateway();
  CampaignContext ctx{graph, llm, *prompts_, *fuzzer, [&](const ApiCombination& combo) {
                        auto d = try_generate_driver(build_prompt(combo, graph, *prompts_), llm, *prompts_);
                        if (d.status != DriverStatus::Generated) return d;
                        auto r = repair_loop(std::move(d), std::move(kb), *compiler, llm, *prompts_, rs);
                        for (const auto& w : r.warnings) log_ << "warning: " << w << "\n";
                        kb = std::move(r.kb);
                        return r.driver;
                      }};
  CampaignSettings cs;
  cs.out_dir = config_.output_dir;
  cs.build_dir = out(artifacts::kBuild);
  cs.time_budget_seconds = static_cast<int>(config_.fuzz_time_budget_seconds);
  cs.mutation_budget = static_cast<int>(config_.mutation_max_iterations);
  cs.max_combination_len = static_cast<std::size_t>(config_.max_combination_len);
  cs.max_seeds = static_cast<std::size_t>(config_.max_seeds);
  cs.workers = workers();
  std::vector<std::string> warnings;
  const json report = run_campaign(std::move(originals), ctx, cs, &warnings);
  for (const auto& w : warnings) log_ << "warning: " << w << "\n";
  save_kb(kb, out(artifacts::kKb));
  log_ << "fuzz: status " << report.at("status").get<std::string>() << ", coverage "
       << report.at("coverage").at("covered") << "/" << report.at("coverage").at("total") << ", "
       << report.at("crashes").size() << " unique crash(es)\n";
}

void Pipeline::triage_stage() {
  require(artifacts::kGraph, Stage::BuildGraph);
  require(artifacts::kReport, Stage::Fuzz);
  if (fresh(artifacts::kTriage)) {
    log_ << "triage.jsonl exists, skipping (use --force to redo)\n";
    return;
  }
  const auto graph = load_graph(out(artifacts::kGraph));
  std::vector<std::string> warnings;
  const auto records = dedup_crashes(load_raw_crashes(config_.output_dir), &warnings);
  for (const auto& w : warnings) log_ << "warning: " << w << "\n";
  const auto drivers = load_drivers(out(artifacts::kDrivers));
  std::vector<CweEntry> cwe;
  try {
    cwe = load_cwe_kb(config_.cwe_kb);
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, "cwe_kb: " + std::string(e.what()));
  }
  const auto cwe_index = build_cwe_index(cwe, embedder());
  TriageInputs in{graph, drivers, cwe, cwe_index, embedder(), gateway(), *prompts_, config_.cwe_threshold};
  const auto verdicts = triage_crashes(records, in, workers());
  write_triage_log(out(artifacts::kTriage), verdicts);
  std::size_t bugs = 0;
  for (const auto& v : verdicts) bugs += v.classification == CrashClass::SuspectedLibraryBug;
  log_ << "triage: " << verdicts.size() << " unique crash(es), " << bugs << " suspected library bug(s)\n";
}

void Pipeline::report_stage() {
  require(artifacts::kReport, Stage::Fuzz);
  json report = read_json_file(out(artifacts::kReport));
  json triage = {{"verdicts", json::array()}, {"counts", {{"MisuseCrash", 0}, {"SuspectedLibraryBug", 0}}}};
  std::error_code ec;
  if (fs::exists(out(artifacts::kTriage), ec)) {
    for (const auto& v : read_triage_log(out(artifacts::kTriage))) {
      triage["verdicts"].push_back({{"crash_id", v.at("crash_id")},
                                    {"driver_id", v.at("driver_id")},
                                    {"classification", v.at("classification")},
                                    {"confidence", v.at("confidence")},
                                    {"matched_cwes", v.at("matched_cwes")}});
      auto& count = triage["counts"][v.at("classification").get<std::string>()];
      count = count.get<int>() + 1;
    }
    report["triage"] = triage;
  } else {
    report["triage"] = nullptr;
  }
  if (fs::exists(out(artifacts::kKb), ec)) report["kb_version"] = load_kb(out(artifacts::kKb)).version();
  write_json_file(out(artifacts::kReport), report);
  log_ << "report: " << out(artifacts::kReport).string() << "\n";
}

std::vector<std::string> Pipeline::plan(Stage stage) {
  std::vector<std::string> lines;
  const std::string chat = "Chat T=1.0";
  const std::string coder = "Coder T=0.7";
  const auto M = std::to_string(config_.repair_max_iterations);
  std::error_code ec;
  auto have = [&](const char* a) { return fs::exists(out(a), ec); };
  switch (stage) {
    case Stage::BuildGraph: {
      if (!config_.summarize) {
        lines.push_back("build-graph: no LLM calls (summarize = false)");
        break;
      }
      const auto model = parse_repository(config_.project_root, config_.include_globs);
      lines.push_back("build-graph: summarize_function x" + std::to_string(model.functions.size()) + " (" + chat + ")");
      lines.push_back("build-graph: summarize_file x" + std::to_string(model.files.size()) + " (" + chat + ")");
      break;
    }
    case Stage::Index:
      lines.push_back("index: no LLM calls (embedding only)");
      break;
    case Stage::Gen: {
      if (!have(artifacts::kGraph) || !have(artifacts::kIndexNl) || !have(artifacts::kIndexCode)) {
        lines.push_back("gen: per API 1 initial + up to " + std::to_string(config_.top_k - 1) +
                        " refine + 1 final (+1 retry) combine calls (" + chat + "), 1-2 generate_driver (" + coder +
                        "); exact counts need graph.json and the indexes");
        break;
      }
      const auto graph = load_graph(out(artifacts::kGraph));
      const auto fp = embedder().fingerprint();
      const auto nl = load_index(out(artifacts::kIndexNl), fp);
      const auto code = load_index(out(artifacts::kIndexCode), fp);
      const RetrievalParams rp{config_.similarity_threshold, static_cast<std::size_t>(config_.top_k)};
      for (const auto& api : graph.apis) {
        if (graph.apis.size() <= 1) {
          lines.push_back("gen " + api.name + ": no combine calls (single API), 1-2 generate_driver (" + coder + ")");
          continue;
        }
        const auto chunks = retrieve_for_target(api, graph, nl, code, rp, embedder());
        const std::size_t refine = chunks.empty() ? 0 : chunks.size() - 1;
        lines.push_back("gen " + api.name + ": 1 combine_initial + " + std::to_string(refine) +
                        " combine_refine + 1 combine_final (+1 retry) (" + chat + "), 1-2 generate_driver (" + coder + ")");
      }
      break;
    }
    case Stage::Repair: {
      if (!have(artifacts::kDrivers)) {
        lines.push_back("repair: up to " + M + " repair_driver calls per generated driver (" + coder + ")");
        break;
      }
      for (const auto& d : load_drivers(out(artifacts::kDrivers))) {
        if (d.status == DriverStatus::Generated) {
          lines.push_back("repair " + d.driver_id + ": 0-" + M + " repair_driver (" + coder + ")");
        }
      }
      break;
    }
    case Stage::Fuzz: {
      const std::string per_mutation = "1-2 generate_driver + 0-" + M + " repair_driver (" + coder + ") + 1 generate_seeds (" + chat + ")";
      if (!have(artifacts::kDrivers)) {
        lines.push_back("fuzz: per compiled driver 1 generate_seeds and up to " +
                        std::to_string(config_.mutation_max_iterations) + " mutate_combination (" + chat + ")");
        break;
      }
      for (const auto& d : load_drivers(out(artifacts::kDrivers))) {
        if (d.status != DriverStatus::Compiled || d.combination.generation != 0) continue;
        if (config_.fuzz_time_budget_seconds == 0) {
          lines.push_back("fuzz " + d.driver_id + ": skipped (time budget 0)");
          continue;
        }
        lines.push_back("fuzz " + d.driver_id + ": 1 generate_seeds (" + chat + "), 0-" +
                        std::to_string(config_.mutation_max_iterations) + " mutate_combination (" + chat +
                        "), each followed by " + per_mutation);
      }
      break;
    }
    case Stage::Triage: {
      std::vector<std::string> w;
      const auto n = dedup_crashes(load_raw_crashes(config_.output_dir), &w).size();
      lines.push_back("triage: " + std::to_string(n) + " unique crash(es) x (1 hypothesize + 1 classify) (" + chat + ")");
      break;
    }
    case Stage::Report:
      lines.push_back("report: no LLM calls");
      break;
  }
  return lines;
}

}  // namespace kgfuzz
