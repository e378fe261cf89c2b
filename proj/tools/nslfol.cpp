#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "nslf/cli/commands.hpp"

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

// flags shared by every command, each overriding one config key
const Flag kFlags[] = {
    {"--dataset", "dataset", "sequence directory"},
    {"--format", "format", "tum_assoc | icl_nuim"},
    {"--skip", "skip", "use every n-th frame for training (default 20)"},
    {"--model", "model", "nslf_sh | hg"},
    {"--cell-edge", "cell_edge", "region edge length in meters (default 4)"},
    {"--quota", "quota", "training iterations granted per frame"},
    {"--seed", "seed", "base seed"},
    {"--executors", "executors", "worker threads, 0 = one per agent"},
    {"--out", "out", "output directory"},
    {"--checkpoint", "checkpoint", "checkpoint directory (render, eval)"},
    {"--mesh", "mesh", "OBJ or PLY mesh (render, eval)"},
    {"--trajectory", "trajectory", "TUM trajectory of render poses"},
    {"--intrinsics", "intrinsics", "intrinsics file for render"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nslfol: online surface light field learning"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  bool deterministic = false, verbose = false, quiet = false;
  std::vector<std::string> overrides;
  std::vector<std::pair<const Flag*, std::string>> flag_values;
  flag_values.reserve(std::size(kFlags));

  app.add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
  for (const auto& f : kFlags) {
    flag_values.emplace_back(&f, std::string{});
    app.add_option(f.name, flag_values.back().second, f.help);
  }
  app.add_flag("--deterministic", deterministic, "no worker threads; training runs inline in region order");
  app.add_option("--set", overrides, "extra key=value override (repeatable)");
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");

  auto* train = app.add_subcommand("train", "stream a sequence through the agents and write a checkpoint");
  auto* render = app.add_subcommand("render", "render a trajectory from a checkpoint and a mesh");
  auto* eval = app.add_subcommand("eval", "render at ground-truth poses and report PSNR, SSIM and angle buckets");
  auto* synth = app.add_subcommand("synth", "write a synthetic sequence with its analytic oracle");
  auto* verify = app.add_subcommand("verify", "run property suites: grad, sh, partition, async, all");
  std::vector<std::string> suites;
  verify->add_option("suite", suites, "suite names")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? nslf::kExitOk : nslf::kExitUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    nslf::RunConfig config;
    if (!config_file.empty()) config.apply_file(config_file);
    config.apply_env(nslf::RunConfig::process_env());
    for (const auto& [flag, value] : flag_values)
      if (app.count(flag->name) > 0) config.set(flag->key, value);
    if (deterministic) config.deterministic = true;
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw nslf::UsageError("--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }

    if (train->parsed()) {
      nslf::cmd_train(config);
    } else if (render->parsed()) {
      nslf::cmd_render(config);
    } else if (eval->parsed()) {
      std::cout << nslf::cmd_eval(config).to_text();
    } else if (synth->parsed()) {
      nslf::cmd_synth(config);
    } else if (verify->parsed()) {
      config.validate(nslf::Command::Verify);
      return nslf::cmd_verify(suites, std::cout);
    }
    return nslf::kExitOk;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return nslf::exit_code_for(e);
  }
}
