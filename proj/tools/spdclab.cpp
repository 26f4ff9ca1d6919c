// spdclab command-line front end.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spdclab/commands.hpp"

namespace {

void report(const std::exception& e) {
  std::cerr << "spdclab: error";
  if (const auto* se = dynamic_cast<const spdclab::Error*>(&e); se && !se->param_path().empty()) {
    std::cerr << " [" << se->param_path() << "]";
  }
  std::cerr << ": " << e.what() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spdclab: cavity-enhanced SPDC source and quantum-dot matching simulations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", spdclab::kVersion);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  const std::map<std::string, std::string> help{
      {"tuning-curve", "signal/idler emission versus crystal temperature and wavelength"},
      {"gain", "phase-matching gain envelope around degeneracy"},
      {"spectrum", "filtered cavity output spectrum (gain x mode comb x etalon)"},
      {"g1", "first-order coherence trace of the unfiltered output and its revival fit"},
      {"wavepacket", "synthetic photon arrival histogram and its lifetime/beat fit"},
      {"g3-sweep", "Monte-Carlo heralded g3 versus pump power"},
      {"qd-scan", "Stark-tuned quantum-dot scattering scan across the filtered spectrum"},
      {"match", "mode overlap with the emitter and the air gap matching its lifetime"},
  };
  for (const auto& [name, fn] : spdclab::commands()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("-c,--config", config_path, "configuration file (default: $SPDCLAB_CONFIG)");
    sub->add_option("-o,--out", out_dir, "output directory (created if missing)")->required();
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--override", overrides, "section.key=value, repeatable")->allow_extra_args(false);
    sub->add_option("-j,--threads", threads, "worker threads (results do not depend on this)")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : spdclab::kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("SPDCLAB_CONFIG")) config_path = env;
    }
    if (config_path.empty()) {
      throw spdclab::ConfigError({"no configuration: pass --config or set SPDCLAB_CONFIG"});
    }
    spdclab::RunContext ctx;
    ctx.cfg = spdclab::load_config(config_path, overrides);
    if (sub->count("--seed")) ctx.cfg.run.seed = seed;
    ctx.out_dir = out_dir;
    ctx.threads = threads;
    std::filesystem::create_directories(ctx.out_dir);
    return spdclab::commands().at(command)(ctx);
  } catch (const std::exception& e) {
    report(e);
    return spdclab::exit_code_for(e);
  }
}
