#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "acr/rng.hpp"
#include "acr/tensor.hpp"

namespace acr {

// y = x · Wᵀ + b with W stored out×in and b stored 1×out.
struct DenseLayer {
  Tensor2 weight;
  Tensor2 bias;
};

// Feature extractor F_θ: a stack of dense layers, ReLU after every layer.
class MlpExtractor {
 public:
  MlpExtractor() = default;
  explicit MlpExtractor(std::vector<DenseLayer> layers);

  // Glorot-uniform weights, zero biases. dims = {input, hidden..., feature}.
  static MlpExtractor glorot(std::span<const std::size_t> dims, Rng& rng);

  std::size_t input_dim() const noexcept;
  std::size_t output_dim() const noexcept;
  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t parameter_count() const noexcept;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

// Classifier G_φ: logits = F · Wᵀ + b, W is C×h.
struct LinearHead {
  Tensor2 weight;
  Tensor2 bias;

  static LinearHead glorot(std::size_t feature_dim, std::size_t classes, Rng& rng);
  static LinearHead zeros(std::size_t feature_dim, std::size_t classes);
  std::size_t classes() const noexcept { return weight.rows(); }
  std::size_t feature_dim() const noexcept { return weight.cols(); }
};

struct Network {
  MlpExtractor extractor;
  LinearHead head;

  // Same shapes, every entry zero. Used as the gradient accumulator.
  Network zeros_like() const;
  std::size_t parameter_count() const noexcept;
};

// Parameter tensors in a fixed order: layer weights/biases, then head weight/bias.
std::vector<Tensor2*> parameter_list(Network& net);
std::vector<const Tensor2*> parameter_list(const Network& net);

struct ExtractorTrace {
  std::vector<Tensor2> inputs;          // input of each layer
  std::vector<Tensor2> pre_activations; // pre-ReLU output of each layer
  Tensor2 features;                     // output of the last layer
  bool valid() const noexcept { return !pre_activations.empty(); }
};

struct ForwardTrace {
  ExtractorTrace extractor;
  Tensor2 logits;
  bool valid() const noexcept { return extractor.valid(); }
  const Tensor2& features() const noexcept { return extractor.features; }
};

ExtractorTrace forward_features(const MlpExtractor& ext, const Tensor2& x);
Tensor2 forward_logits(const LinearHead& head, const Tensor2& features);
ForwardTrace forward(const Network& net, const Tensor2& x);

// Accumulates into `grads` (a zeros_like of net) the parameter gradients
// given upstream gradients on the features and on the logits. Either
// upstream may be an empty tensor, meaning zero. Throws StateError when the
// trace holds no forward pass.
void backward(const Network& net, const ForwardTrace& trace, const Tensor2& grad_features,
              const Tensor2& grad_logits, Network& grads);

// Extractor-only backward (no head involvement).
void backward_features(const MlpExtractor& ext, const ExtractorTrace& trace,
                       const Tensor2& grad_features, MlpExtractor& grads);

// Row c of the returned head is the L2-normalised mean of the L2-normalised
// features of class c; bias is zero. Throws MissingClassError when a class in
// [0, classes) has no example.
LinearHead imprint(const Tensor2& features, std::span<const int> labels, std::size_t classes);
LinearHead imprint(const LinearHead& head, const Tensor2& features, std::span<const int> labels);

// teacher ← α·teacher + (1−α)·student, element-wise.
void ema_update(Network& teacher, const Network& student, double alpha);

// FNV-1a over the raw bytes of every parameter (shapes included).
std::uint64_t parameter_hash(const Network& net);

std::vector<int> predict(const Network& net, const Tensor2& x);
double accuracy(const Network& net, const Tensor2& x, std::span<const int> labels);

// Frozen source model plus the trainable target model built on a copy of its extractor.
class ModelPair {
 public:
  ModelPair(Network source, LinearHead target_head);

  const Network& source() const noexcept { return source_; }
  const Network& target() const noexcept { return target_; }
  Network& target() noexcept { return target_; }

 private:
  Network source_;
  Network target_;
};

}  // namespace acr
