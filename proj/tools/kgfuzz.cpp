#include <CLI11.hpp>

#include <iostream>

#include "kgfuzz/app/config.hpp"
#include "kgfuzz/app/pipeline.hpp"
#include "kgfuzz/common/error.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStage = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::string config;
  std::string stage;
  bool force = false;
  bool dry_run = false;
  std::int64_t workers = 0;
};

int execute(const std::string& command, const Flags& flags) {
  using namespace kgfuzz;
  try {
    auto config = load_campaign_config(flags.config);
    PipelineOptions options;
    options.force = flags.force;
    if (flags.workers > 0) options.workers = flags.workers;

    std::vector<Stage> stages;
    if (command == "run-all") {
      auto first = Stage::BuildGraph;
      if (!flags.stage.empty()) {
        auto s = stage_from_string(flags.stage);
        if (!s) throw Error(Errc::ConfigError, "--stage: unknown stage '" + flags.stage + "'");
        first = *s;
      }
      bool started = false;
      for (auto s : all_stages()) {
        started = started || s == first;
        if (started) stages.push_back(s);
      }
    } else {
      stages.push_back(*stage_from_string(command));
    }

    Pipeline pipeline(std::move(config), options, std::cerr);
    if (flags.dry_run) {
      for (auto s : stages) {
        for (const auto& line : pipeline.plan(s)) std::cout << line << "\n";
      }
      return kExitOk;
    }
    WorkspaceLock lock(pipeline.config().output_dir);
    for (auto s : stages) pipeline.run(s);
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool config_side = e.code() == Errc::ConfigError || e.code() == Errc::MissingArtifact;
    return config_side ? kExitConfig : kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph guided fuzz driver generation for C libraries"};
  app.require_subcommand(1);
  Flags flags;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"build-graph", "parse the project and build graph.json"},
      {"index", "embed graph chunks into index_nl.json and index_code.json"},
      {"gen", "query API combinations and generate drivers"},
      {"repair", "compile drivers and repair failures"},
      {"fuzz", "seed, fuzz and mutate compiled drivers"},
      {"triage", "deduplicate and classify crashes"},
      {"report", "finalize report.json"},
      {"run-all", "run every stage in order"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "campaign config file")->required();
    sub->add_flag("--force", flags.force, "rebuild artifacts that already exist");
    sub->add_option("--workers", flags.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--dry-run", flags.dry_run, "print the planned LLM calls and exit");
    if (name == "run-all") sub->add_option("--stage", flags.stage, "first stage to run");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  return execute(app.get_subcommands().front()->get_name(), flags);
}
