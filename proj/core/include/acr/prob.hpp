#pragma once

#include <span>
#include <vector>

#include "acr/tensor.hpp"

namespace acr {

// Lower bound applied to every argument of log().
inline constexpr double kLogClamp = 1e-12;

// A categorical distribution: entries in [0,1] summing to 1 (within 1e-9).
class ProbVec {
 public:
  // Validates and throws InvalidInput when the invariants do not hold.
  explicit ProbVec(std::vector<double> p);
  static ProbVec from_row(const Tensor2& row);
  static ProbVec uniform(std::size_t classes);

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const noexcept { return p_[i]; }
  std::span<const double> values() const noexcept { return p_; }
  Tensor2 as_row() const;

 private:
  std::vector<double> p_;
};

ProbVec softmax(const Tensor2& logits_row);
ProbVec softmax(std::span<const double> logits);
// Row-wise softmax of a batch of logits.
Tensor2 softmax_rows(const Tensor2& logits);

// Shannon entropy in nats with 0·log0 := 0.
double entropy(const ProbVec& p);
std::vector<double> entropy_rows(const Tensor2& probs);

// KL(p ‖ q) with q clamped to >= kLogClamp inside the log.
double kl_div(const ProbVec& p, const ProbVec& q);
double mse(const Tensor2& a, const Tensor2& b);

// Unchecked span kernels used by the batched losses.
namespace detail {
void softmax_into(std::span<const double> logits, std::span<double> out) noexcept;
double entropy_of(std::span<const double> p) noexcept;
double kl_of(std::span<const double> p, std::span<const double> q) noexcept;
// Given probabilities p = softmax(z) and dL/dp, writes dL/dz.
void softmax_backward(std::span<const double> p, std::span<const double> grad_p,
                      std::span<double> grad_z) noexcept;
}  // namespace detail

}  // namespace acr
