// adinv: batch front end for simulation, inversion and identifiability checks.

#include <iostream>

#include "CLI11.hpp"

#include "adinv/adinv.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> problem;
  std::optional<int> until;
};

void add_common(CLI::App* cmd, Common& c, bool with_until) {
  cmd->add_option("-c,--config", c.config, "experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "root seed, overrides the config");
  cmd->add_option("-o,--out", c.out, "output directory, overrides output.dir");
  cmd->add_option("--problem", c.problem, "p1, p2 or p3")->check(CLI::IsMember({"p1", "p2", "p3"}));
  if (with_until) cmd->add_option("--until", c.until, "last observation index used by the inversion");
}

adinv::ExperimentConfig resolve(const Common& c) {
  adinv::ExperimentConfig cfg = adinv::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out = *c.out;
  if (c.problem) cfg.problem = adinv::parse_problem(*c.problem);
  if (c.until) cfg.until = *c.until;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Advection-diffusion source inversion from sparse sensors"};
  app.require_subcommand(1);

  using Command = std::function<nlohmann::json(const adinv::ExperimentConfig&, const std::filesystem::path&)>;
  struct Entry {
    const char* name;
    const char* help;
    bool until;
    Command run;
  };
  const std::vector<Entry> entries = {
      {"simulate", "propagate the initial source and write field snapshots", false, adinv::cmd_simulate},
      {"observe", "sample the field at the sensors and add noise", false, adinv::cmd_observe},
      {"invert", "recover the initial field from observations", true, adinv::cmd_invert},
      {"check", "run the identifiability checks for the configured layout", true, adinv::cmd_check},
      {"sensitivity", "repeat the inversion under perturbed velocity", true, adinv::cmd_sensitivity},
      {"lambda-sweep", "invert over a grid of regularisation weights", true, adinv::cmd_lambda_sweep},
  };
  std::vector<Common> opts(entries.size());
  std::vector<CLI::App*> cmds;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    cmds.push_back(app.add_subcommand(entries[i].name, entries[i].help));
    add_common(cmds.back(), opts[i], entries[i].until);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (!cmds[i]->parsed()) continue;
      const adinv::ExperimentConfig cfg = resolve(opts[i]);
      const nlohmann::json summary = entries[i].run(cfg, cfg.out);
      std::cout << summary.dump() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "adinv: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
