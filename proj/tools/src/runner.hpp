#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "acr/config.hpp"
#include "acr/pipeline.hpp"

namespace acr::runner {

enum ExitCode : int { kSuccess = 0, kRunFailure = 1, kConfigFailure = 2 };

// Everything a verb needs from the command line.
struct Invocation {
  std::optional<std::filesystem::path> config_path;  // defaults when absent
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::vector<std::string> overrides;  // "dotted.key=value"
};

enum class SweepAxis { kEpsK, kEpsR, kNLabeled, kLambdaR };

std::optional<SweepAxis> parse_axis(std::string_view name);
std::string_view axis_name(SweepAxis axis);
// The config key a sweep axis writes to.
std::string_view axis_key(SweepAxis axis);

// $ACR_OUTPUT_ROOT when set and non-empty, otherwise "runs".
std::filesystem::path default_output_root();

// Loads the config file (if any), applies --set overrides and then --seed/--out.
// Throws ConfigError.
ExperimentConfig resolve_config(const Invocation& inv);

// metrics.csv, metrics.json, config.json, source.ckpt, target.ckpt
void write_run_artifacts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                         const TransferData& data, const RunResult& result);

struct AccuracyStats {
  std::size_t runs = 0;
  double final_mean = 0.0;
  double final_std = 0.0;  // sample standard deviation; 0 for a single run
  double best_mean = 0.0;
  double best_std = 0.0;
};

// Re-reads metrics.csv from each run directory.
AccuracyStats summarize_runs(const std::vector<std::filesystem::path>& run_dirs);

// Method variants compared by `compare`, as (label, overrides).
struct MethodVariant {
  std::string label;
  std::vector<std::string> overrides;
};
const std::vector<MethodVariant>& compared_methods();

int cmd_run(const Invocation& inv, std::ostream& out, std::ostream& err);
int cmd_sweep(const Invocation& inv, SweepAxis axis, const std::vector<double>& values, std::ostream& out,
              std::ostream& err);
int cmd_compare(const Invocation& inv, std::ostream& out, std::ostream& err);

}  // namespace acr::runner
