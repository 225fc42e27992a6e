#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "acr/model.hpp"
#include "acr/rng.hpp"
#include "acr/tensor.hpp"

namespace acr {

enum class SslMethod { kNone, kPseudoLabel, kMeanTeacher };

std::string_view to_string(SslMethod m);
SslMethod ssl_method_from_string(std::string_view s);  // throws InvalidInput

struct SslConfig {
  SslMethod method = SslMethod::kNone;
  double lambda_s = 1.0;
  double pl_confidence = 0.95;  // in (0, 1]
  double ema_alpha = 0.999;     // in [0, 1)
  // Perturbation std as a multiple of each input feature's data std.
  double noise_std = 0.1;
};

// A scalar loss of a batch of logits and its gradient with respect to them.
struct LogitLoss {
  double value = 0.0;
  Tensor2 grad_logits;
  std::size_t accepted = 0;
};

// Mean of −log p_y (argument clamped at 1e-12). Throws InvalidLabel.
LogitLoss cross_entropy_loss(const Tensor2& logits, std::span<const int> labels);

struct PseudoLabels {
  std::vector<std::size_t> rows;  // rows whose max probability reached the confidence
  std::vector<int> labels;        // argmax class of each accepted row
};

PseudoLabels select_pseudo_labels(const Tensor2& logits, double confidence);
// Cross-entropy against the pseudo-labels, averaged over accepted rows; 0 if none.
LogitLoss pseudo_label_loss(const Tensor2& logits, const PseudoLabels& targets);
LogitLoss pseudo_label_loss(const Tensor2& logits, double confidence);

// Mean over all entries of (softmax(student) − teacher_probs)².
LogitLoss mean_teacher_loss(const Tensor2& student_logits, const Tensor2& teacher_probs);

// Per-column standard deviation of a data matrix (population form).
std::vector<double> column_std(const Tensor2& x);

// Additive Gaussian noise, column j drawn with std noise_std · feature_std[j].
Tensor2 gaussian_perturbation(std::size_t rows, std::span<const double> feature_std,
                              double noise_std, Rng& rng);

struct SslResult {
  double value = 0.0;
  Network grads;
  std::size_t accepted = 0;
};

SslResult cross_entropy_loss(const Network& model, const Tensor2& x, std::span<const int> labels);

// The perturbation tensors may be empty, meaning no noise.
SslResult pseudo_label_loss(const Network& model, const Tensor2& x_unlabeled,
                            const Tensor2& perturbation, double confidence);
// Gradient flows to the student only; the teacher is read.
SslResult mean_teacher_loss(const Network& student, const Network& teacher,
                            const Tensor2& x_unlabeled, const Tensor2& student_perturbation,
                            const Tensor2& teacher_perturbation);

}  // namespace acr
