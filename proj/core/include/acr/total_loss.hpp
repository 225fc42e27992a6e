#pragma once

#include <cstdint>
#include <vector>

#include "acr/consistency.hpp"
#include "acr/model.hpp"
#include "acr/ssl.hpp"

namespace acr {

struct LossWeights {
  double lambda_k = 1.0;
  double lambda_r = 30.0;
  double lambda_s = 1.0;
};

// Which terms of L = L_CE + λ_S·L_S + λ_K·R_K + λ_R·R_R are active.
struct LossConfig {
  LossWeights weights;
  GateConfig gate;
  bool akc = false;
  bool arc = false;
  Divergence akc_divergence = Divergence::kMse;
  MmdEstimator arc_estimator = MmdEstimator::kUnbiased;
  SslConfig ssl;
};

// One optimisation step's inputs. The AKC fields describe the labeled rows
// followed by the unlabeled rows and come from the frozen source model.
struct StepBatch {
  Tensor2 x_labeled;
  std::vector<int> y_labeled;
  Tensor2 x_unlabeled;
  Tensor2 source_features;
  std::vector<double> akc_weights;
};

// Fills the AKC fields from the source model of `pair`.
StepBatch make_step_batch(const ModelPair& pair, Tensor2 x_labeled, std::vector<int> y_labeled,
                          Tensor2 x_unlabeled, const GateConfig& gate);

// Input noise for the SSL term. Empty tensors mean no noise.
struct Perturbations {
  Tensor2 student;
  Tensor2 teacher;
};

// Forward passes of the target model needed by the active terms.
struct StepTraces {
  ForwardTrace labeled;
  ForwardTrace unlabeled;  // clean unlabeled rows; valid when AKC or ARC is active
  ForwardTrace perturbed;  // noisy unlabeled rows; valid when an SSL method is active
};

StepTraces compute_traces(const Network& target, const StepBatch& batch, const LossConfig& config,
                          const Perturbations& noise);

// The discrete decisions of a step, frozen before the loss is evaluated:
// ARC selection/buffer contents/bandwidths, pseudo-labels and teacher targets.
struct StepPlan {
  ArcPlan arc;
  PseudoLabels pseudo;
  Tensor2 teacher_probs;
};

// Mutates `buffers` when ARC is active. `teacher` is required for mean teacher.
StepPlan plan_step(const StepTraces& traces, const StepBatch& batch, const LossConfig& config,
                   const Network* teacher, const Perturbations& noise, ArcBuffers* buffers,
                   std::int64_t step);

struct LossBreakdown {
  double ce = 0.0;
  double ssl = 0.0;
  double akc = 0.0;
  double arc = 0.0;
  double total = 0.0;
  double akc_fraction = 0.0;
  double arc_labeled_fraction = 0.0;
  double arc_unlabeled_fraction = 0.0;
  std::size_t pseudo_accepted = 0;
};

struct LossEvaluation {
  LossBreakdown breakdown;
  Network grads;  // empty when gradients were not requested
};

LossEvaluation evaluate_total_loss(const Network& target, const StepTraces& traces,
                                   const StepBatch& batch, const StepPlan& plan,
                                   const LossConfig& config, bool with_grads = true);

// Traces, plan and evaluation in one call.
LossEvaluation total_loss(const ModelPair& pair, const Network* teacher, const StepBatch& batch,
                          const LossConfig& config, ArcBuffers* buffers, const Perturbations& noise,
                          std::int64_t step);

}  // namespace acr
