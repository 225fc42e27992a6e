#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "acr/metrics.hpp"
#include "runner.hpp"

namespace fs = std::filesystem;
using namespace acr;
using namespace acr::runner;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("acr_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::string> tiny() {
  return {"task.source_train=300", "task.source_test=100", "task.target_train=120", "task.target_test=80",
          "split.n_labeled=8",     "optim.epochs=2",        "pretrain.epochs=3",     "experiment.seeds=2"};
}

Invocation tiny_invocation(const fs::path& out, std::vector<std::string> extra = {}) {
  Invocation inv;
  inv.out = out;
  inv.overrides = tiny();
  inv.overrides.insert(inv.overrides.end(), extra.begin(), extra.end());
  return inv;
}

// Each summary.csv line is axis-or-method, key, runs, final_mean, final_std, best_mean, best_std.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("run writes metrics, metadata, config and both checkpoints") {
  const fs::path dir = scratch("artifacts") / "run";
  std::ostringstream out, err;
  REQUIRE(cmd_run(tiny_invocation(dir), out, err) == kSuccess);
  for (const char* f : {"metrics.csv", "metrics.json", "config.json", "source.ckpt", "target.ckpt"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  CHECK(out.str().find("final epoch 2") != std::string::npos);
  CHECK(out.str().find("best epoch") != std::string::npos);

  const MetricsLog log = metrics_from_csv(slurp(dir / "metrics.csv"));
  CHECK(log.records.size() == 3);

  // The stored config re-executes the same run.
  Invocation again;
  again.config_path = dir / "config.json";
  again.out = dir.parent_path() / "rerun";
  REQUIRE(cmd_run(again, out, err) == kSuccess);
  CHECK(slurp(dir / "metrics.csv") == slurp(again.out.value() / "metrics.csv"));
}

TEST_CASE("missing config file exits 2") {
  Invocation inv;
  inv.config_path = "/definitely/not/here.json";
  std::ostringstream out, err;
  CHECK(cmd_run(inv, out, err) == kConfigFailure);
  CHECK(err.str().find("cannot read config file") != std::string::npos);
}

TEST_CASE("invalid fields exit 2 with their dotted paths") {
  const fs::path dir = scratch("invalid");
  spit(dir / "bad.json", R"({"optim": {"lr": -1.0, "epochs": 3}, "loss": {"lambda_k": -2}})");
  Invocation inv;
  inv.config_path = dir / "bad.json";
  std::ostringstream out, err;
  CHECK(cmd_run(inv, out, err) == kConfigFailure);
  CHECK(err.str().find("optim.lr") != std::string::npos);
  CHECK(err.str().find("loss.lambda_k") != std::string::npos);

  Invocation unknown;
  unknown.overrides = {"optim.learning_rate=0.1"};
  std::ostringstream err2;
  CHECK(cmd_run(unknown, out, err2) == kConfigFailure);
  CHECK(err2.str().find("optim.learning_rate") != std::string::npos);
}

TEST_CASE("runtime failure exits 1") {
  const fs::path dir = scratch("runtime");
  spit(dir / "bad.csv", "f0,f1,label\n0.1,abc,0\n0.2,0.3,1\n");
  Invocation inv;
  inv.out = dir / "run";
  inv.overrides = {"data.source=csv", "data.source_train_csv=" + (dir / "bad.csv").string(),
                   "data.target_train_csv=" + (dir / "bad.csv").string(),
                   "data.target_test_csv=" + (dir / "bad.csv").string()};
  std::ostringstream out, err;
  CHECK(cmd_run(inv, out, err) == kRunFailure);
  CHECK(err.str().find("non-numeric") != std::string::npos);
}

TEST_CASE("default output root follows the environment") {
  ::setenv("ACR_OUTPUT_ROOT", "/tmp/acr_env_root", 1);
  CHECK(default_output_root() == fs::path("/tmp/acr_env_root"));
  ::setenv("ACR_OUTPUT_ROOT", "", 1);
  CHECK(default_output_root() == fs::path("runs"));
  ::unsetenv("ACR_OUTPUT_ROOT");
  CHECK(default_output_root() == fs::path("runs"));
}

TEST_CASE("sweep axes parse and map to config keys") {
  CHECK(parse_axis("eps_k") == SweepAxis::kEpsK);
  CHECK(parse_axis("lambda_r") == SweepAxis::kLambdaR);
  CHECK_FALSE(parse_axis("eps_x").has_value());
  CHECK(axis_key(SweepAxis::kNLabeled) == "split.n_labeled");
  CHECK(axis_key(SweepAxis::kEpsR) == "gate.eps_r_ratio");
}

TEST_CASE("sweep emits one directory per value and seed and a recomputable summary") {
  const fs::path root = scratch("sweep");
  std::ostringstream out, err;
  REQUIRE(cmd_sweep(tiny_invocation(root, {"method.akc=true"}), SweepAxis::kEpsK, {0.0, 0.5, 1.0}, out, err) ==
          kSuccess);
  std::size_t dirs = 0;
  for (const char* v : {"eps_k=0", "eps_k=0.5", "eps_k=1"}) {
    for (const char* s : {"seed_0", "seed_1"}) {
      CHECK_MESSAGE(fs::exists(root / v / s / "metrics.csv"), v, "/", s);
      ++dirs;
    }
  }
  CHECK(dirs == 6);

  const auto rows = csv_rows(slurp(root / "summary.csv"));
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    double sum = 0.0;
    for (const char* s : {"seed_0", "seed_1"}) {
      sum += metrics_from_csv(slurp(root / ("eps_k=" + row[1]) / s / "metrics.csv")).last().test_acc;
    }
    CHECK(row[2] == "2");
    CHECK(std::stod(row[3]) == doctest::Approx(sum / 2.0).epsilon(1e-6));
  }
}

TEST_CASE("single-value sweep reproduces run") {
  const fs::path root = scratch("single");
  std::ostringstream out, err;
  REQUIRE(cmd_sweep(tiny_invocation(root / "sweep", {"experiment.seeds=1"}), SweepAxis::kLambdaR, {30.0}, out,
                    err) == kSuccess);
  REQUIRE(cmd_run(tiny_invocation(root / "run"), out, err) == kSuccess);
  CHECK(slurp(root / "sweep" / "lambda_r=30" / "seed_0" / "metrics.csv") == slurp(root / "run" / "metrics.csv"));
}

TEST_CASE("sweep rejects an invalid axis value before running anything") {
  const fs::path root = scratch("sweep_reject");
  std::ostringstream out, err;
  CHECK(cmd_sweep(tiny_invocation(root, {"experiment.seeds=1"}), SweepAxis::kNLabeled, {2.0, 8.0}, out, err) ==
        kConfigFailure);
  CHECK(err.str().find("split.n_labeled") != std::string::npos);
  CHECK_FALSE(fs::exists(root / "n_labeled=8"));
}

TEST_CASE("sweep sub-run failures are reported with exit 1") {
  const fs::path root = scratch("sweep_fail");
  // Four CSV classes: n_labeled=2 passes config validation but fails the split.
  std::string csv = "a,b,label\n";
  for (int i = 0; i < 80; ++i) {
    const int c = i % 4;
    csv += std::to_string(c + 0.01 * i) + "," + std::to_string(c % 2 - 0.01 * i) + "," + std::to_string(c) + "\n";
  }
  spit(root / "data.csv", csv);
  const std::string path = (root / "data.csv").string();
  Invocation inv = tiny_invocation(root / "out", {"experiment.seeds=1", "data.source=csv",
                                                  "data.source_train_csv=" + path, "data.source_test_csv=" + path,
                                                  "data.target_train_csv=" + path, "data.target_test_csv=" + path});
  std::ostringstream out, err;
  CHECK(cmd_sweep(inv, SweepAxis::kNLabeled, {2.0, 8.0}, out, err) == kRunFailure);
  CHECK(err.str().find("n_labeled=2") != std::string::npos);
  CHECK(fs::exists(root / "out" / "n_labeled=8" / "seed_0" / "metrics.csv"));
  const auto rows = csv_rows(slurp(root / "out" / "summary.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][2] == "0");
  CHECK(rows[1][2] == "1");
}

TEST_CASE("compare covers every method and grid cell; supervised matches run") {
  const fs::path root = scratch("compare");
  std::ostringstream out, err;
  REQUIRE(cmd_compare(tiny_invocation(root / "cmp", {"experiment.seeds=1", "experiment.n_labeled_grid=[8,12]",
                                                      "optim.epochs=1"}),
                      out, err) == kSuccess);
  const auto rows = csv_rows(slurp(root / "cmp" / "summary.csv"));
  CHECK(rows.size() == compared_methods().size() * 2);
  const auto table = csv_rows(slurp(root / "cmp" / "summary_table.csv"));
  REQUIRE(table.size() == compared_methods().size());
  for (std::size_t m = 0; m < table.size(); ++m) {
    CHECK(table[m][0] == compared_methods()[m].label);
    CHECK(table[m].size() == 3);
  }

  REQUIRE(cmd_run(tiny_invocation(root / "run", {"optim.epochs=1"}), out, err) == kSuccess);
  CHECK(slurp(root / "cmp" / "supervised" / "n=8" / "seed_0" / "metrics.csv") ==
        slurp(root / "run" / "metrics.csv"));
}
