#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "acr/consistency.hpp"
#include "acr/data.hpp"
#include "acr/ssl.hpp"
#include "acr/total_loss.hpp"

namespace acr {

inline constexpr int kConfigSchemaVersion = 1;

enum class HeadInit { kImprint, kRandom };

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "csv"
  std::string source_train_csv;
  std::string source_test_csv;
  std::string target_train_csv;
  std::string target_test_csv;
  std::string label_column = "label";
};

struct ModelConfig {
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t feature_dim = 32;
  HeadInit head_init = HeadInit::kImprint;
};

struct MethodConfig {
  bool akc = false;
  bool arc = false;
  SslMethod ssl = SslMethod::kNone;
  Divergence akc_divergence = Divergence::kMse;
  MmdEstimator arc_estimator = MmdEstimator::kUnbiased;
};

struct OptimConfig {
  double lr = 0.001;
  double momentum = 0.9;
  std::size_t epochs = 60;
  std::size_t batch_labeled = 64;
  std::size_t batch_unlabeled = 64;
  std::size_t steps_per_epoch = 0;  // 0: ceil(|labeled ∪ unlabeled| / batch_unlabeled)
};

struct PretrainConfig {
  std::size_t epochs = 30;
  double lr = 0.05;
  std::size_t batch = 64;
};

struct ExperimentGrid {
  std::size_t seeds = 5;
  std::vector<std::size_t> n_labeled_grid = {20, 40, 100};
  std::size_t jobs = 1;
};

// Full declarative description of a run. Every field has a default.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir;
  DataConfig data;
  SyntheticTaskSpec task;  // task.seed is ignored; the run seed drives generation
  std::size_t n_labeled = 40;
  ModelConfig model;
  MethodConfig method;
  LossWeights weights;
  double eps_k_ratio = 0.7;  // ε_K = ratio · ln C_s
  double eps_r_ratio = 0.7;  // ε_R = ratio · ln C_t
  std::size_t buffer_capacity = 256;
  std::size_t buffer_k = 64;
  SslConfig ssl;  // ssl.method mirrors method.ssl
  OptimConfig optim;
  PretrainConfig pretrain;
  ExperimentGrid experiment;

  LossConfig loss_config(std::size_t source_classes, std::size_t target_classes) const;
  // Short label such as "supervised", "akc+arc" or "pseudo_label+akc+arc".
  std::string method_label() const;
};

// Canonical JSON (2-space indent, fixed key order).
std::string to_json(const ExperimentConfig& cfg);
// Throws ConfigError listing every problem as "dotted.path: message".
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies "dotted.key=value" assignments. Values are parsed as JSON when
// possible and taken as strings otherwise. Unknown keys are rejected.
ExperimentConfig apply_overrides(const ExperimentConfig& cfg, const std::vector<std::string>& assignments);

}  // namespace acr
