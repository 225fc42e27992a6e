#pragma once

#include <cstdint>
#include <vector>

#include "acr/model.hpp"
#include "acr/rng.hpp"

namespace acr {

// η_t = η_0 · cos(7πt / (16T)) for 0 <= t <= T. Throws InvalidInput outside the domain.
double cosine_lr(std::int64_t t, std::int64_t total, double eta0);

struct OptimState {
  double eta0 = 0.001;
  double momentum = 0.9;
  std::int64_t step = 0;
  std::int64_t total_steps = 1;
  Network velocity;  // mirrors the parameter shapes

  static OptimState for_network(const Network& net, double eta0, std::int64_t total_steps,
                                double momentum = 0.9);
  double current_lr() const { return cosine_lr(step, total_steps, eta0); }
};

// v ← μ·v + g;  p ← p − η_t·v;  t ← t + 1. Returns the η_t used.
double sgd_step(Network& params, const Network& grads, OptimState& state);

// Streams batches by walking a shuffled permutation; a fresh permutation is
// drawn whenever the current one runs out, so a batch larger than the set
// wraps across reshuffles.
class EpochSampler {
 public:
  EpochSampler(std::size_t set_size, Rng rng);
  std::vector<std::size_t> next(std::size_t batch);
  std::size_t set_size() const noexcept { return order_.size(); }

 private:
  void reshuffle();

  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

struct BatchIndices {
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
};

BatchIndices sample_batches(EpochSampler& labeled, EpochSampler& unlabeled, std::size_t batch_labeled,
                            std::size_t batch_unlabeled);

}  // namespace acr
