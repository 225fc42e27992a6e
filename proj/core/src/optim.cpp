#include "acr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "acr/error.hpp"

namespace acr {

double cosine_lr(std::int64_t t, std::int64_t total, double eta0) {
  if (total < 1) throw InvalidInput("cosine_lr: T must be >= 1");
  if (t < 0 || t > total) {
    throw InvalidInput("cosine_lr: step " + std::to_string(t) + " outside [0, " +
                       std::to_string(total) + "]");
  }
  return eta0 * std::cos(7.0 * std::numbers::pi * static_cast<double>(t) /
                         (16.0 * static_cast<double>(total)));
}

OptimState OptimState::for_network(const Network& net, double eta0, std::int64_t total_steps,
                                   double momentum) {
  OptimState s;
  s.eta0 = eta0;
  s.momentum = momentum;
  s.total_steps = total_steps;
  s.velocity = net.zeros_like();
  return s;
}

double sgd_step(Network& params, const Network& grads, OptimState& state) {
  auto p = parameter_list(params);
  auto g = parameter_list(grads);
  auto v = parameter_list(state.velocity);
  if (p.size() != g.size() || p.size() != v.size()) throw ShapeError("sgd_step: parameter count mismatch");
  for (std::size_t i = 0; i < p.size(); ++i) {
    require_same_shape(*p[i], *g[i], "sgd_step(grad)");
    require_same_shape(*p[i], *v[i], "sgd_step(velocity)");
  }
  if (state.step >= state.total_steps) throw StateError("sgd_step: schedule exhausted");
  const double lr = state.current_lr();
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pv = p[i]->values();
    auto gv = g[i]->values();
    auto vv = v[i]->values();
    for (std::size_t j = 0; j < pv.size(); ++j) {
      vv[j] = state.momentum * vv[j] + gv[j];
      pv[j] -= lr * vv[j];
    }
  }
  ++state.step;
  return lr;
}

EpochSampler::EpochSampler(std::size_t set_size, Rng rng) : rng_(std::move(rng)), order_(set_size) {
  if (set_size == 0) throw EmptyInput("EpochSampler: empty set");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  reshuffle();
}

void EpochSampler::reshuffle() {
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

std::vector<std::size_t> EpochSampler::next(std::size_t batch) {
  std::vector<std::size_t> out;
  out.reserve(batch);
  while (out.size() < batch) {
    if (cursor_ == order_.size()) reshuffle();
    out.push_back(order_[cursor_++]);
  }
  return out;
}

BatchIndices sample_batches(EpochSampler& labeled, EpochSampler& unlabeled, std::size_t batch_labeled,
                            std::size_t batch_unlabeled) {
  return {labeled.next(batch_labeled), unlabeled.next(batch_unlabeled)};
}

}  // namespace acr
