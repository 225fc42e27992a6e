#pragma once

#include <span>
#include <vector>

#include "acr/tensor.hpp"

namespace acr {

// exp(-‖x-y‖² / (2σ²)). Throws InvalidInput for σ <= 0, ShapeError on length mismatch.
double rbf_kernel(std::span<const double> x, std::span<const double> y, double sigma);
double rbf_kernel(const Tensor2& x_row, const Tensor2& y_row, double sigma);

// kBiased is the V-statistic: within-set means run over all m² (n²) pairs,
// diagonal included, so the value is never negative.
// kUnbiased is the U-statistic: within-set means skip the diagonal and divide
// by m(m−1) (n(n−1)); it needs at least two rows per set and can dip below 0.
enum class MmdEstimator { kBiased, kUnbiased };

// Squared MMD between the row sets V (m×d) and U (n×d), summed over every
// bandwidth in `sigmas`:
//   Σ_σ [ mean k(v,v') + mean k(u,u') − 2 mean k(v,u) ]
double mmd2(const Tensor2& v, const Tensor2& u, std::span<const double> sigmas,
            MmdEstimator estimator = MmdEstimator::kBiased);

struct Mmd2Gradient {
  double value = 0.0;
  Tensor2 grad_v;  // d value / d V, same shape as V
  Tensor2 grad_u;  // d value / d U, same shape as U
};

// Value and gradient with respect to both row sets; the bandwidths are
// treated as constants.
Mmd2Gradient mmd2_with_grad(const Tensor2& v, const Tensor2& u, std::span<const double> sigmas,
                            MmdEstimator estimator = MmdEstimator::kBiased);

// Median Euclidean distance over all distinct pairs of the pooled rows of V
// and U, or 1 when that median is 0 or fewer than two rows exist.
double median_pairwise_distance(const Tensor2& v, const Tensor2& u);

// {0.5, 1, 2} × median_pairwise_distance(V, U).
std::vector<double> median_bandwidths(const Tensor2& v, const Tensor2& u);

// mmd2 with bandwidths chosen by median_bandwidths on the same inputs.
double mmd2_median(const Tensor2& v, const Tensor2& u);

}  // namespace acr
