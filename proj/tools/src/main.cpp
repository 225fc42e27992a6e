#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "runner.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
  std::optional<std::size_t> jobs;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON config file (defaults are used when omitted)");
    cmd->add_option("--seed", seed, "Run seed, or first seed of a multi-seed verb");
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--set", sets, "Override a config key: --set optim.epochs=10")->take_all();
  }

  acr::runner::Invocation invocation() const {
    acr::runner::Invocation inv;
    if (!config.empty()) inv.config_path = config;
    inv.seed = seed;
    if (!out.empty()) inv.out = out;
    inv.overrides = sets;
    if (jobs) inv.overrides.push_back("experiment.jobs=" + std::to_string(*jobs));
    return inv;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised transfer fine-tuning with adaptive consistency regularizers"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "Pre-train, fine-tune and write metrics and checkpoints");
  run_flags.attach(run);

  CommonFlags sweep_flags;
  std::string axis;
  std::vector<double> values;
  CLI::App* sweep = app.add_subcommand("sweep", "Repeat a run over one config axis and several seeds");
  sweep_flags.attach(sweep);
  sweep->add_option("--axis", axis, "eps_k | eps_r | n_labeled | lambda_r")->required();
  sweep->add_option("--values", values, "Axis values; gate axes take ratios of ln C")->required();
  sweep->add_option("--jobs", sweep_flags.jobs, "Concurrent sub-runs");

  CommonFlags compare_flags;
  CLI::App* compare = app.add_subcommand("compare", "Baselines and regularizers over the n_labeled grid");
  compare_flags.attach(compare);
  compare->add_option("--jobs", compare_flags.jobs, "Concurrent sub-runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : acr::runner::kConfigFailure;
  }

  if (*run) return acr::runner::cmd_run(run_flags.invocation(), std::cout, std::cerr);
  if (*sweep) {
    const auto parsed = acr::runner::parse_axis(axis);
    if (!parsed) {
      std::cerr << "config error:\n--axis: unknown axis '" << axis << "' (eps_k, eps_r, n_labeled, lambda_r)\n";
      return acr::runner::kConfigFailure;
    }
    return acr::runner::cmd_sweep(sweep_flags.invocation(), *parsed, values, std::cout, std::cerr);
  }
  return acr::runner::cmd_compare(compare_flags.invocation(), std::cout, std::cerr);
}
