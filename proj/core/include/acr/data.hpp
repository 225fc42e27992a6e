#pragma once

#include <cstdint>
#include <vector>

#include "acr/tensor.hpp"

namespace acr {

struct LabeledSet {
  Tensor2 x;
  std::vector<int> y;
  std::vector<std::size_t> ids;  // example identity, unique across a task's splits
  std::size_t classes = 0;

  std::size_t size() const noexcept { return y.size(); }
  LabeledSet subset(std::span<const std::size_t> rows) const;
};

// Synthetic source→target transfer task. Source clusters have unit-spaced
// means; the target reuses a random subset of them, rotated by
// `transfer_rotation_deg` and shifted by `transfer_shift`.
struct SyntheticTaskSpec {
  std::size_t input_dim = 16;
  std::size_t source_classes = 10;
  std::size_t target_classes = 4;
  double cluster_std = 0.3;
  double transfer_rotation_deg = 15.0;
  double transfer_shift = 0.2;
  std::size_t source_train = 4000;
  std::size_t source_test = 1000;
  std::size_t target_train = 2000;
  std::size_t target_test = 1000;
  std::uint64_t seed = 0;

  // Throws ConfigError describing every violated invariant.
  void validate() const;
};

struct TransferTask {
  LabeledSet source_train;
  LabeledSet source_test;
  LabeledSet target_train;
  LabeledSet target_test;
  Tensor2 source_means;                      // C_s × d
  Tensor2 target_means;                      // C_t × d
  std::vector<std::size_t> target_from_source;  // source class behind each target class
};

TransferTask generate_task(const SyntheticTaskSpec& spec);

struct SplitSet {
  LabeledSet labeled;
  Tensor2 unlabeled;
  std::vector<std::size_t> unlabeled_ids;
  std::vector<int> unlabeled_hidden_labels;  // for diagnostics only, never used in training
  LabeledSet test;
};

// Class-stratified draw of n labeled examples from `train`; the remainder
// becomes unlabeled. Per-class labeled counts differ by at most one unless a
// class runs out of examples. Throws InvalidSplit when n < classes or
// n > train.size().
SplitSet split_labeled(const LabeledSet& train, const LabeledSet& test, std::size_t n,
                       std::uint64_t seed);

}  // namespace acr
