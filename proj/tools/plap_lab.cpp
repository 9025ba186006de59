#include <iostream>

#include <CLI11.hpp>

#include "plap/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"p-Laplacian torsion lab: solve, verify identities, sweep grids, run oracles"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  const std::pair<const char*, const char*> commands[] = {
      {"solve", "solve the torsion problem on each (p, h) grid point"},
      {"verify", "solve, then check the boundary and integral identities"},
      {"sweep", "identity residuals over a (p, h) grid as one CSV table"},
      {"matcheck", "random sweep of the refined matrix inequality"},
      {"radial", "closed-form radial profiles against a 1-D finite-volume solve"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "random seed (overrides seed)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : plap::kExitConfigError;
  }

  const CLI::App* sub = app.get_subcommands().front();
  plap::RunOverrides overrides;
  if (sub->count("--out")) overrides.out_dir = out;
  if (sub->count("--seed")) overrides.seed = seed;
  return plap::run(plap::parse_command(sub->get_name()), config, overrides, std::cerr);
}
