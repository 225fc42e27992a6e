#include "acr/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acr/error.hpp"

namespace acr {

namespace {

double squared_distance(std::span<const double> x, std::span<const double> y) noexcept {
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    acc += d * d;
  }
  return acc;
}

Tensor2 squared_distances(const Tensor2& a, const Tensor2& b) {
  Tensor2 out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row_span(i);
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = squared_distance(ai, b.row_span(j));
  }
  return out;
}

void check_sets(const Tensor2& v, const Tensor2& u, std::span<const double> sigmas, MmdEstimator estimator) {
  if (v.rows() == 0 || u.rows() == 0) throw EmptyInput("mmd2: empty sample set");
  if (estimator == MmdEstimator::kUnbiased && (v.rows() < 2 || u.rows() < 2)) {
    throw InvalidInput("mmd2: the unbiased estimator needs two rows per set");
  }
  if (v.cols() != u.cols()) {
    throw ShapeError("mmd2: dims " + std::to_string(v.cols()) + " and " + std::to_string(u.cols()));
  }
  if (sigmas.empty()) throw InvalidInput("mmd2: no bandwidths");
  for (double s : sigmas) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInput("mmd2: bandwidth must be > 0");
  }
}

// Kernel means are accumulated in extended precision: the estimator subtracts
// quantities of order |sigmas| to get a result that is often far smaller.
using Wide = long double;

// Sum of Σ_σ exp(-D/(2σ²)) over all entries of a squared-distance matrix.
Wide kernel_sum(const Tensor2& sq, std::span<const double> sigmas) {
  Wide acc = 0.0L;
  for (double s : sigmas) {
    const double inv = 1.0 / (2.0 * s * s);
    for (double d : sq.values()) acc += std::exp(-d * inv);
  }
  return acc;
}

// Number of pairs a within-set mean divides by, and the kernel mass on the
// diagonal (k(x,x) = 1 for every bandwidth) that the U-statistic drops.
struct WithinSet {
  double pairs;
  Wide diagonal;
};

WithinSet within_set(std::size_t rows, std::size_t bandwidths, MmdEstimator estimator) {
  const double r = static_cast<double>(rows);
  if (estimator == MmdEstimator::kBiased) return {r * r, 0.0L};
  return {r * (r - 1.0), static_cast<Wide>(bandwidths) * static_cast<Wide>(rows)};
}

// c_ij = Σ_σ k_σ(i,j) / σ²
Tensor2 gradient_weights(const Tensor2& sq, std::span<const double> sigmas, Wide& kernel_sum) {
  Tensor2 c(sq.rows(), sq.cols());
  kernel_sum = 0.0L;
  for (double s : sigmas) {
    const double inv = 1.0 / (2.0 * s * s);
    const double inv_s2 = 1.0 / (s * s);
    for (std::size_t i = 0; i < sq.size(); ++i) {
      const double k = std::exp(-sq[i] * inv);
      kernel_sum += k;
      c[i] += k * inv_s2;
    }
  }
  return c;
}

// grad_a[i] += coef · Σ_j c_ij (a_i − b_j)
void accumulate_pull(const Tensor2& a, const Tensor2& b, const Tensor2& c, double coef,
                     Tensor2& grad_a) {
  const std::size_t d = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row_span(i);
    auto gi = grad_a.row_span(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double w = coef * c(i, j);
      if (w == 0.0) continue;
      auto bj = b.row_span(j);
      for (std::size_t k = 0; k < d; ++k) gi[k] += w * (ai[k] - bj[k]);
    }
  }
}

}  // namespace

double rbf_kernel(std::span<const double> x, std::span<const double> y, double sigma) {
  if (!(sigma > 0.0)) throw InvalidInput("rbf_kernel: sigma must be > 0");
  if (x.size() != y.size()) throw ShapeError("rbf_kernel: dimension mismatch");
  return std::exp(-squared_distance(x, y) / (2.0 * sigma * sigma));
}

double rbf_kernel(const Tensor2& x_row, const Tensor2& y_row, double sigma) {
  if (x_row.rows() != 1 || y_row.rows() != 1) throw ShapeError("rbf_kernel: expected single rows");
  return rbf_kernel(x_row.row_span(0), y_row.row_span(0), sigma);
}

double mmd2(const Tensor2& v, const Tensor2& u, std::span<const double> sigmas, MmdEstimator estimator) {
  check_sets(v, u, sigmas, estimator);
  const WithinSet wv = within_set(v.rows(), sigmas.size(), estimator);
  const WithinSet wu = within_set(u.rows(), sigmas.size(), estimator);
  const Wide kvv = (kernel_sum(squared_distances(v, v), sigmas) - wv.diagonal) / static_cast<Wide>(wv.pairs);
  const Wide kuu = (kernel_sum(squared_distances(u, u), sigmas) - wu.diagonal) / static_cast<Wide>(wu.pairs);
  const Wide kvu = kernel_sum(squared_distances(v, u), sigmas) /
                   (static_cast<Wide>(v.rows()) * static_cast<Wide>(u.rows()));
  return static_cast<double>((kvv + kuu) - 2.0L * kvu);
}

Mmd2Gradient mmd2_with_grad(const Tensor2& v, const Tensor2& u, std::span<const double> sigmas,
                            MmdEstimator estimator) {
  check_sets(v, u, sigmas, estimator);
  const double m = static_cast<double>(v.rows());
  const double n = static_cast<double>(u.rows());
  const WithinSet wv = within_set(v.rows(), sigmas.size(), estimator);
  const WithinSet wu = within_set(u.rows(), sigmas.size(), estimator);

  Wide sum_vv = 0.0L;
  Wide sum_uu = 0.0L;
  Wide sum_vu = 0.0L;
  const Tensor2 c_vv = gradient_weights(squared_distances(v, v), sigmas, sum_vv);
  const Tensor2 c_uu = gradient_weights(squared_distances(u, u), sigmas, sum_uu);
  const Tensor2 c_vu = gradient_weights(squared_distances(v, u), sigmas, sum_vu);

  Mmd2Gradient out;
  const Wide wm = m;
  const Wide wn = n;
  out.value = static_cast<double>(((sum_vv - wv.diagonal) / static_cast<Wide>(wv.pairs) +
                                   (sum_uu - wu.diagonal) / static_cast<Wide>(wu.pairs)) -
                                  2.0L * (sum_vu / (wm * wn)));

  // d k(x,y) / dx = −k (x − y) / σ²
  out.grad_v = Tensor2(v.rows(), v.cols());
  out.grad_u = Tensor2(u.rows(), u.cols());
  accumulate_pull(v, v, c_vv, -2.0 / wv.pairs, out.grad_v);
  accumulate_pull(v, u, c_vu, 2.0 / (m * n), out.grad_v);
  accumulate_pull(u, u, c_uu, -2.0 / wu.pairs, out.grad_u);

  Tensor2 c_uv(u.rows(), v.rows());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t j = 0; j < u.rows(); ++j) c_uv(j, i) = c_vu(i, j);
  }
  accumulate_pull(u, v, c_uv, 2.0 / (m * n), out.grad_u);
  return out;
}

double median_pairwise_distance(const Tensor2& v, const Tensor2& u) {
  if (v.rows() > 0 && u.rows() > 0 && v.cols() != u.cols()) {
    throw ShapeError("median_pairwise_distance: dimension mismatch");
  }
  const Tensor2 pooled = vstack(v, u);
  const std::size_t rows = pooled.rows();
  if (rows < 2) return 1.0;

  std::vector<double> dist;
  dist.reserve(rows * (rows - 1) / 2);
  for (std::size_t i = 0; i < rows; ++i) {
    auto ri = pooled.row_span(i);
    for (std::size_t j = i + 1; j < rows; ++j) {
      dist.push_back(std::sqrt(squared_distance(ri, pooled.row_span(j))));
    }
  }
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  return median > 0.0 ? median : 1.0;
}

std::vector<double> median_bandwidths(const Tensor2& v, const Tensor2& u) {
  const double med = median_pairwise_distance(v, u);
  return {0.5 * med, med, 2.0 * med};
}

double mmd2_median(const Tensor2& v, const Tensor2& u) {
  const auto sigmas = median_bandwidths(v, u);
  return mmd2(v, u, sigmas);
}

}  // namespace acr
