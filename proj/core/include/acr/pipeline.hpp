#pragma once

#include <functional>
#include <optional>
#include <string>

#include "acr/config.hpp"
#include "acr/csv.hpp"
#include "acr/data.hpp"
#include "acr/metrics.hpp"
#include "acr/model.hpp"

namespace acr {

// Everything the pipeline consumes, after generation or CSV ingestion.
struct TransferData {
  LabeledSet source_train;
  LabeledSet source_test;
  SplitSet target;
  LabelMap target_label_map;  // empty for synthetic tasks
  std::size_t source_classes = 0;
  std::size_t target_classes = 0;
};

// Synthetic generation (seeded by cfg.seed) or CSV loading, then the labeled split.
TransferData prepare_data(const ExperimentConfig& cfg);
// Source sets only; `target` stays empty. Enough for pretrain_source.
TransferData prepare_source_data(const ExperimentConfig& cfg);

struct PretrainResult {
  Network source;
  double source_test_acc = 0.0;
};

// Plain cross-entropy training of extractor + source head on the source task.
PretrainResult pretrain_source(const LabeledSet& source_train, const LabeledSet& source_test,
                               const ExperimentConfig& cfg);

struct RunOptions {
  // Reuse a source model trained by pretrain_source for the same seed and data.
  const PretrainResult* pretrained = nullptr;
  // Also report mmd2 between the full labeled and unlabeled representation sets at the end.
  bool final_representation_mmd = false;
  // Called after every epoch record is appended.
  std::function<void(const EpochRecord&)> on_epoch;
};

struct RunResult {
  MetricsLog log;
  Network source;
  Network target;
  double source_test_acc = 0.0;
  std::uint64_t source_hash_before = 0;
  std::uint64_t source_hash_after = 0;
  std::optional<double> representation_mmd;
};

// Pre-train (or reuse) the source model, copy and freeze it, initialise the
// target head, then fine-tune with the composite loss, evaluating every epoch.
RunResult run_pipeline(const ExperimentConfig& cfg, const TransferData& data,
                       const RunOptions& options = {});
RunResult run_pipeline(const ExperimentConfig& cfg, const RunOptions& options = {});

// Run metadata recorded next to the metrics (JSON object text).
std::string run_metadata_json(const ExperimentConfig& cfg, const TransferData& data,
                              const RunResult& result);

}  // namespace acr
