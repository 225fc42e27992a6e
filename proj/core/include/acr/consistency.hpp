#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "acr/kernel.hpp"
#include "acr/model.hpp"
#include "acr/prob.hpp"
#include "acr/replay_buffer.hpp"
#include "acr/tensor.hpp"

namespace acr {

// Entropy thresholds in nats.
struct GateConfig {
  double eps_k = 0.0;  // knowledge-consistency gate, against the source prediction
  double eps_r = 0.0;  // representation-consistency gate, against the target prediction

  // eps = ratio · ln(C). Default ratios are 0.7.
  static GateConfig from_ratios(double ratio_k, double ratio_r, std::size_t source_classes,
                                std::size_t target_classes);
  static GateConfig defaults(std::size_t source_classes, std::size_t target_classes);
};

// 1 when H(p) <= eps (boundary included), else 0.
double entropy_gate(double entropy_nats, double eps);
std::vector<double> entropy_gate(std::span<const double> entropies, double eps);
double akc_gate(const ProbVec& p_source, double eps_k);

enum class Divergence { kMse, kKl };

// ---- Adaptive knowledge consistency --------------------------------------

struct AkcTerm {
  double value = 0.0;
  Tensor2 grad_target_features;  // d value / d F_θ(x), rows aligned with the batch
  double selected_fraction = 0.0;
};

// R_K = (1/B) Σ_i w_i · D(F_θ⁰(x_i), F_θ(x_i)). D is the per-row mean squared
// difference (kMse) or KL(softmax(F_θ⁰) ‖ softmax(F_θ)) (kKl).
AkcTerm akc_term(const Tensor2& source_features, const Tensor2& target_features,
                 std::span<const double> weights, Divergence mode);

// Per-example gate weights from the frozen source model's predictions.
std::vector<double> akc_weights(const Network& source, const Tensor2& x, double eps_k);

struct AkcResult {
  double value = 0.0;
  Network grads;  // only extractor entries are non-zero
  double selected_fraction = 0.0;
};

// x holds the labeled rows followed by the unlabeled rows of one step.
AkcResult akc_loss(const ModelPair& pair, const Tensor2& x, std::span<const double> weights,
                   Divergence mode);
AkcResult akc_loss(const ModelPair& pair, const Tensor2& x_labeled, const Tensor2& x_unlabeled,
                   const GateConfig& gate, Divergence mode);

// ---- Adaptive representation consistency ---------------------------------

std::vector<std::size_t> selected_indices(std::span<const double> entropies, double eps);
// Rows of `features` whose prediction entropy is <= eps_r, order preserved.
Tensor2 arc_select(const Tensor2& features, std::span<const ProbVec> preds, double eps_r);

struct ArcBuffers {
  ReplayBuffer labeled;
  ReplayBuffer unlabeled;

  ArcBuffers(std::size_t dim, std::size_t capacity = 256, std::size_t k = 64)
      : labeled(dim, capacity, k), unlabeled(dim, capacity, k) {}
};

// Everything about one ARC evaluation that is fixed at the start of the step:
// which batch rows are selected and live, the detached buffered rows, and the
// kernel bandwidths. Evaluating the same plan at perturbed parameters gives
// the function whose gradient arc_term reports.
struct ArcPlan {
  std::vector<std::size_t> labeled_live;    // batch rows carrying gradient, in fetch order
  std::vector<std::size_t> unlabeled_live;
  Tensor2 labeled_stale;                    // buffered rows, no gradient
  Tensor2 unlabeled_stale;
  std::vector<double> sigmas;
  MmdEstimator estimator = MmdEstimator::kUnbiased;
  bool skip = true;
  double labeled_fraction = 0.0;
  double unlabeled_fraction = 0.0;
};

// Selects confident rows, pushes them into the buffers and records the
// fetched sets. A set with fewer than 2 rows makes the plan a skip.
ArcPlan plan_arc(const Tensor2& features_l, const Tensor2& logits_l, const Tensor2& features_u,
                 const Tensor2& logits_u, double eps_r, ArcBuffers& buffers, std::int64_t step,
                 MmdEstimator estimator = MmdEstimator::kUnbiased);

struct ArcTerm {
  double value = 0.0;
  Tensor2 grad_labeled;    // B_l × h
  Tensor2 grad_unlabeled;  // B_u × h
};

ArcTerm arc_term(const ArcPlan& plan, const Tensor2& features_l, const Tensor2& features_u);

struct ArcResult {
  double value = 0.0;
  Network grads;
  double labeled_fraction = 0.0;
  double unlabeled_fraction = 0.0;
  ArcPlan plan;
};

ArcResult arc_loss(const ModelPair& pair, const Tensor2& x_labeled, const Tensor2& x_unlabeled,
                   const GateConfig& gate, ArcBuffers& buffers, std::int64_t step,
                   MmdEstimator estimator = MmdEstimator::kUnbiased);

}  // namespace acr
