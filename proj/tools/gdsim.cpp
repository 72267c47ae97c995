#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gdsim/cli.hpp"

namespace {

const std::vector<std::pair<std::string, std::string>> kFlags = {
    {"model", "hk or episim"},
    {"steps", "number of steps (days for episim)"},
    {"workers", "worker count; a comma list for scale"},
    {"seed", "seed for all randomness"},
    {"checks", "on, off or warn"},
    {"hints", "on or off"},
    {"partition", "contiguous, round-robin or greedy"},
    {"topology", "hk graph: complete, regular or clique"},
    {"epsilon", "hk confidence bound"},
    {"n", "agents (hk) or persons (episim)"},
    {"k", "regular topology degree"},
    {"cliques", "clique topology: number of cliques"},
    {"clique-size", "clique topology: agents per clique"},
    {"theta", "episim infection probability per contact"},
    {"locations", "episim locations for a generated schedule"},
    {"initial-infected", "episim initially infected persons"},
    {"schedule", "episim visit schedule CSV"},
    {"calls", "microbench timed calls per plan"},
    {"out", "output CSV path (default stdout)"},
};

struct Subcommand {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config;
  CLI::Option* config_opt = nullptr;
};

void add_flags(Subcommand& s) {
  for (const auto& [name, help] : kFlags) s.options[name] = s.app->add_option("--" + name, s.values[name], help);
  s.config_opt = s.app->add_option("--config", s.config, "key=value config file; flags override it");
}

gdsim::cli::RunConfig build_config(const Subcommand& s) {
  gdsim::cli::RunConfig c;
  if (s.config_opt->count() > 0) gdsim::cli::load_config_file(c, s.config);
  for (const auto& [name, opt] : s.options) {
    if (opt->count() > 0) gdsim::cli::set_option(c, name, s.values.at(name));
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gdsim: synchronous graph agent-based simulation"};
  app.require_subcommand(1);
  Subcommand run, scale, bench;
  run.app = app.add_subcommand("run", "run a model and print per-step metrics");
  scale.app = app.add_subcommand("scale", "time a model across worker counts");
  bench.app = app.add_subcommand("microbench", "time add_edge per edge storage plan");
  for (Subcommand* s : {&run, &scale, &bench}) add_flags(*s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gdsim::cli::kExitConfig;
  }

  Subcommand* chosen = run.app->parsed() ? &run : scale.app->parsed() ? &scale : &bench;
  gdsim::cli::RunConfig config;
  try {
    config = build_config(*chosen);
  } catch (const gdsim::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return gdsim::cli::kExitConfig;
  }

  std::ofstream file;
  if (!config.out.empty()) {
    file.open(config.out);
    if (!file) {
      std::cerr << "error: cannot write '" << config.out << "'\n";
      return gdsim::cli::kExitConfig;
    }
  }
  std::ostream& out = config.out.empty() ? std::cout : file;
  if (chosen == &run) return gdsim::cli::cmd_run(config, out);
  if (chosen == &scale) return gdsim::cli::cmd_scale(config, out);
  return gdsim::cli::cmd_microbench(config, out);
}
