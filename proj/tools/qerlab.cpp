// qerlab command-line driver.
//
//   qerlab <subcommand> --config run.cfg [--seed N] [--out DIR] [--threads N] [--verbose]

#include <iostream>

#include "CLI11.hpp"
#include "qerlab/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Restricted quantum ergodicity experiments on billiards and hyperbolic surfaces"};
  app.require_subcommand(1);
  qerlab::cli::Options opt;
  std::uint64_t seed = 0;
  for (const auto& [name, fn] : qerlab::cli::commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config, "run configuration (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_flag("--verbose", opt.verbose, "progress messages on stderr");
  }
  CLI11_PARSE(app, argc, argv);

  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed") > 0) opt.seed = seed;
  try {
    qerlab::cli::run_command(sub->get_name(), opt);
  } catch (const qerlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const qerlab::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
