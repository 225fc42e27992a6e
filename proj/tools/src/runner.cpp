#include "runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "acr/checkpoint.hpp"
#include "acr/error.hpp"
#include "acr/metrics.hpp"

namespace acr::runner {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shortest text that round-trips through the config parser: "0.5", "40".
std::string format_value(double v) {
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error:\n" << e.what();
    return kConfigFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRunFailure;
  }
}

// Runs fn(0..n-1) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

// Pre-training only depends on these sections, so sub-runs that agree on
// them share one source model.
std::string pretrain_key(const ExperimentConfig& cfg) {
  const auto tree = nlohmann::json::parse(to_json(cfg));
  nlohmann::json key;
  for (const char* section : {"seed", "data", "task", "model", "pretrain"}) key[section] = tree.at(section);
  return key.dump();
}

struct SubRun {
  ExperimentConfig cfg;
  fs::path dir;
  std::string label;  // printed progress tag
};

struct BatchReport {
  std::size_t failures = 0;
};

BatchReport execute(const std::vector<SubRun>& runs, std::size_t jobs, std::ostream& out, std::ostream& err) {
  std::map<std::string, std::size_t> key_index;
  std::vector<const ExperimentConfig*> pretrain_cfgs;
  std::vector<std::size_t> run_key(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto [it, inserted] = key_index.emplace(pretrain_key(runs[i].cfg), pretrain_cfgs.size());
    if (inserted) pretrain_cfgs.push_back(&runs[i].cfg);
    run_key[i] = it->second;
  }

  std::mutex io;
  std::vector<std::unique_ptr<PretrainResult>> sources(pretrain_cfgs.size());
  std::vector<std::string> source_errors(pretrain_cfgs.size());
  parallel_for(pretrain_cfgs.size(), jobs, [&](std::size_t k) {
    try {
      const ExperimentConfig& cfg = *pretrain_cfgs[k];
      const TransferData data = prepare_source_data(cfg);
      sources[k] = std::make_unique<PretrainResult>(pretrain_source(data.source_train, data.source_test, cfg));
    } catch (const std::exception& e) {
      source_errors[k] = e.what();
    }
  });

  std::atomic<std::size_t> failures{0};
  parallel_for(runs.size(), jobs, [&](std::size_t i) {
    const SubRun& run = runs[i];
    try {
      const std::size_t k = run_key[i];
      if (!sources[k]) throw Error("source pre-training failed: " + source_errors[k]);
      const TransferData data = prepare_data(run.cfg);
      RunOptions options;
      options.pretrained = sources[k].get();
      options.final_representation_mmd = true;
      const RunResult result = run_pipeline(run.cfg, data, options);
      write_run_artifacts(run.dir, run.cfg, data, result);
      std::lock_guard lock(io);
      out << run.label << "  final " << fixed(result.log.last().test_acc) << "  best "
          << fixed(result.log.best().test_acc) << "\n";
    } catch (const std::exception& e) {
      ++failures;
      std::lock_guard lock(io);
      err << run.label << " failed: " << e.what() << "\n";
    }
  });
  return {failures.load()};
}

std::vector<std::uint64_t> seed_list(const ExperimentConfig& cfg) {
  std::vector<std::uint64_t> seeds(cfg.experiment.seeds);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = cfg.seed + i;
  return seeds;
}

ExperimentConfig sub_config(const ExperimentConfig& base, std::vector<std::string> overrides,
                            std::uint64_t seed, const fs::path& dir) {
  ExperimentConfig cfg = apply_overrides(base, overrides);
  cfg.seed = seed;
  cfg.output_dir = dir.string();
  return cfg;
}

fs::path root_dir(const ExperimentConfig& cfg, const std::string& fallback) {
  return cfg.output_dir.empty() ? default_output_root() / fallback : fs::path(cfg.output_dir);
}

std::string stats_csv_fields(const AccuracyStats& s) {
  return std::to_string(s.runs) + "," + fixed(s.final_mean, 6) + "," + fixed(s.final_std, 6) + "," +
         fixed(s.best_mean, 6) + "," + fixed(s.best_std, 6);
}

constexpr const char* kStatsHeader = "runs,final_mean,final_std,best_mean,best_std";

}  // namespace

std::optional<SweepAxis> parse_axis(std::string_view name) {
  if (name == "eps_k") return SweepAxis::kEpsK;
  if (name == "eps_r") return SweepAxis::kEpsR;
  if (name == "n_labeled") return SweepAxis::kNLabeled;
  if (name == "lambda_r") return SweepAxis::kLambdaR;
  return std::nullopt;
}

std::string_view axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kEpsK: return "eps_k";
    case SweepAxis::kEpsR: return "eps_r";
    case SweepAxis::kNLabeled: return "n_labeled";
    case SweepAxis::kLambdaR: return "lambda_r";
  }
  return "";
}

std::string_view axis_key(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kEpsK: return "gate.eps_k_ratio";
    case SweepAxis::kEpsR: return "gate.eps_r_ratio";
    case SweepAxis::kNLabeled: return "split.n_labeled";
    case SweepAxis::kLambdaR: return "loss.lambda_r";
  }
  return "";
}

fs::path default_output_root() {
  const char* env = std::getenv("ACR_OUTPUT_ROOT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

ExperimentConfig resolve_config(const Invocation& inv) {
  ExperimentConfig cfg = inv.config_path ? load_config(*inv.config_path) : ExperimentConfig{};
  cfg = apply_overrides(cfg, inv.overrides);
  if (inv.seed) cfg.seed = *inv.seed;
  if (inv.out) cfg.output_dir = inv.out->string();
  return cfg;
}

void write_run_artifacts(const fs::path& dir, const ExperimentConfig& cfg, const TransferData& data,
                         const RunResult& result) {
  fs::create_directories(dir);
  write_text(dir / "config.json", to_json(cfg));
  write_text(dir / "metrics.csv", to_csv(result.log));
  write_text(dir / "metrics.json", to_json(result.log, run_metadata_json(cfg, data, result)));
  save_checkpoint(dir / "source.ckpt", result.source);
  save_checkpoint(dir / "target.ckpt", result.target);
}

AccuracyStats summarize_runs(const std::vector<fs::path>& run_dirs) {
  AccuracyStats s;
  std::vector<double> finals;
  std::vector<double> bests;
  for (const auto& dir : run_dirs) {
    const MetricsLog log = metrics_from_csv(read_text(dir / "metrics.csv"));
    finals.push_back(log.last().test_acc);
    bests.push_back(log.best().test_acc);
  }
  s.runs = finals.size();
  if (s.runs == 0) return s;
  auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
    double sum = 0.0;
    for (double x : v) sum += x;
    mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  };
  mean_std(finals, s.final_mean, s.final_std);
  mean_std(bests, s.best_mean, s.best_std);
  return s;
}

const std::vector<MethodVariant>& compared_methods() {
  static const std::vector<MethodVariant> methods = {
      {"supervised", {"method.akc=false", "method.arc=false", "method.ssl=none"}},
      {"pseudo_label", {"method.akc=false", "method.arc=false", "method.ssl=pseudo_label"}},
      {"mean_teacher", {"method.akc=false", "method.arc=false", "method.ssl=mean_teacher"}},
      {"akc", {"method.akc=true", "method.arc=false", "method.ssl=none"}},
      {"arc", {"method.akc=false", "method.arc=true", "method.ssl=none"}},
      {"akc+arc", {"method.akc=true", "method.arc=true", "method.ssl=none"}},
      {"pseudo_label+akc+arc", {"method.akc=true", "method.arc=true", "method.ssl=pseudo_label"}},
  };
  return methods;
}

int cmd_run(const Invocation& inv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig cfg = resolve_config(inv);
    const fs::path dir =
        root_dir(cfg, cfg.method_label() + "_seed" + std::to_string(cfg.seed));
    cfg.output_dir = dir.string();
    const TransferData data = prepare_data(cfg);
    RunOptions options;
    options.final_representation_mmd = true;
    const RunResult result = run_pipeline(cfg, data, options);
    write_run_artifacts(dir, cfg, data, result);
    const EpochRecord& last = result.log.last();
    const EpochRecord& best = result.log.best();
    out << cfg.method_label() << " seed " << cfg.seed << "\n"
        << "source test accuracy  " << fixed(result.source_test_acc) << "\n"
        << "final epoch " << last.epoch << "  test accuracy " << fixed(last.test_acc) << "\n"
        << "best epoch  " << best.epoch << "  test accuracy " << fixed(best.test_acc) << "\n"
        << "outputs in " << dir.string() << "\n";
    return int{kSuccess};
  });
}

int cmd_sweep(const Invocation& inv, SweepAxis axis, const std::vector<double>& values, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    if (values.empty()) throw ConfigError("--values: at least one value required\n");
    const ExperimentConfig base = resolve_config(inv);
    const std::string name(axis_name(axis));
    const fs::path root = root_dir(base, "sweep_" + name);

    std::vector<SubRun> runs;
    std::vector<std::vector<fs::path>> groups(values.size());
    for (std::size_t v = 0; v < values.size(); ++v) {
      const std::string tag = name + "=" + format_value(values[v]);
      const std::vector<std::string> overrides = {std::string(axis_key(axis)) + "=" + format_value(values[v])};
      for (std::uint64_t seed : seed_list(base)) {
        const fs::path dir = root / tag / ("seed_" + std::to_string(seed));
        runs.push_back({sub_config(base, overrides, seed, dir), dir, tag + " seed " + std::to_string(seed)});
        groups[v].push_back(dir);
      }
    }

    const BatchReport report = execute(runs, base.experiment.jobs, out, err);

    std::string csv = "axis,value," + std::string(kStatsHeader) + "\n";
    out << "\n" << std::left << std::setw(14) << name << std::setw(8) << "runs" << std::setw(20)
        << "final mean+-std" << "best mean+-std\n";
    for (std::size_t v = 0; v < values.size(); ++v) {
      std::vector<fs::path> done;
      for (const auto& dir : groups[v]) {
        if (fs::exists(dir / "metrics.csv")) done.push_back(dir);
      }
      const AccuracyStats s = summarize_runs(done);
      csv += name + "," + format_value(values[v]) + "," + stats_csv_fields(s) + "\n";
      out << std::setw(14) << format_value(values[v]) << std::setw(8) << s.runs << std::setw(20)
          << (fixed(s.final_mean) + "+-" + fixed(s.final_std)) << fixed(s.best_mean) << "+-"
          << fixed(s.best_std) << "\n";
    }
    fs::create_directories(root);
    write_text(root / "summary.csv", csv);
    out << "summary written to " << (root / "summary.csv").string() << "\n";
    if (report.failures > 0) {
      err << report.failures << " of " << runs.size() << " sub-runs failed\n";
      return int{kRunFailure};
    }
    return int{kSuccess};
  });
}

int cmd_compare(const Invocation& inv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig base = resolve_config(inv);
    const fs::path root = root_dir(base, "compare");
    const auto& methods = compared_methods();
    const auto& grid = base.experiment.n_labeled_grid;

    std::vector<SubRun> runs;
    std::vector<std::vector<std::vector<fs::path>>> cells(methods.size(),
                                                           std::vector<std::vector<fs::path>>(grid.size()));
    for (std::size_t m = 0; m < methods.size(); ++m) {
      for (std::size_t g = 0; g < grid.size(); ++g) {
        auto overrides = methods[m].overrides;
        overrides.push_back("split.n_labeled=" + std::to_string(grid[g]));
        const std::string tag = methods[m].label + " n=" + std::to_string(grid[g]);
        for (std::uint64_t seed : seed_list(base)) {
          const fs::path dir =
              root / methods[m].label / ("n=" + std::to_string(grid[g])) / ("seed_" + std::to_string(seed));
          runs.push_back({sub_config(base, overrides, seed, dir), dir, tag + " seed " + std::to_string(seed)});
          cells[m][g].push_back(dir);
        }
      }
    }

    const BatchReport report = execute(runs, base.experiment.jobs, out, err);

    std::string csv = "method,n_labeled," + std::string(kStatsHeader) + "\n";
    std::string table = "method";
    for (std::size_t n : grid) table += ",n=" + std::to_string(n);
    table += "\n";
    out << "\nfinal-epoch test accuracy, mean over seeds\n" << std::left << std::setw(24) << "method";
    for (std::size_t n : grid) out << std::setw(12) << ("n=" + std::to_string(n));
    out << "\n";
    for (std::size_t m = 0; m < methods.size(); ++m) {
      table += methods[m].label;
      out << std::setw(24) << methods[m].label;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<fs::path> done;
        for (const auto& dir : cells[m][g]) {
          if (fs::exists(dir / "metrics.csv")) done.push_back(dir);
        }
        const AccuracyStats s = summarize_runs(done);
        csv += methods[m].label + "," + std::to_string(grid[g]) + "," + stats_csv_fields(s) + "\n";
        table += "," + fixed(s.final_mean, 6);
        out << std::setw(12) << fixed(s.final_mean);
      }
      table += "\n";
      out << "\n";
    }
    fs::create_directories(root);
    write_text(root / "summary.csv", csv);
    write_text(root / "summary_table.csv", table);
    out << "summary written to " << (root / "summary.csv").string() << "\n";
    if (report.failures > 0) {
      err << report.failures << " of " << runs.size() << " sub-runs failed\n";
      return int{kRunFailure};
    }
    return int{kSuccess};
  });
}

}  // namespace acr::runner
