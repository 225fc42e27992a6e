#include "acr/prob.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acr/error.hpp"

namespace acr {

ProbVec::ProbVec(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw InvalidInput("ProbVec: empty distribution");
  double total = 0.0;
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw InvalidInput("ProbVec: entry " + std::to_string(v) + " outside [0,1]");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidInput("ProbVec: entries sum to " + std::to_string(total));
  }
}

ProbVec ProbVec::from_row(const Tensor2& row) {
  if (row.rows() != 1) throw ShapeError("ProbVec::from_row: expected a single row");
  return ProbVec(std::vector<double>(row.values().begin(), row.values().end()));
}

ProbVec ProbVec::uniform(std::size_t classes) {
  if (classes == 0) throw InvalidInput("ProbVec::uniform: zero classes");
  return ProbVec(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

Tensor2 ProbVec::as_row() const { return Tensor2(1, p_.size(), p_); }

namespace detail {

void softmax_into(std::span<const double> logits, std::span<double> out) noexcept {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out[j] = std::exp(logits[j] - peak);
    total += out[j];
  }
  for (double& v : out) v /= total;
}

double entropy_of(std::span<const double> p) noexcept {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(std::max(v, kLogClamp));
  }
  return h;
}

double kl_of(std::span<const double> p, std::span<const double> q) noexcept {
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) {
      d += p[j] * (std::log(std::max(p[j], kLogClamp)) - std::log(std::max(q[j], kLogClamp)));
    }
  }
  return d;
}

void softmax_backward(std::span<const double> p, std::span<const double> grad_p,
                      std::span<double> grad_z) noexcept {
  double dot = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * grad_p[j];
  for (std::size_t j = 0; j < p.size(); ++j) grad_z[j] = p[j] * (grad_p[j] - dot);
}

}  // namespace detail

ProbVec softmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidInput("softmax: empty logits");
  for (double v : logits) {
    if (!std::isfinite(v)) throw InvalidInput("softmax: non-finite logit");
  }
  std::vector<double> out(logits.size());
  detail::softmax_into(logits, out);
  return ProbVec(std::move(out));
}

ProbVec softmax(const Tensor2& logits_row) {
  if (logits_row.rows() != 1) throw ShapeError("softmax: expected a single row");
  return softmax(logits_row.row_span(0));
}

Tensor2 softmax_rows(const Tensor2& logits) {
  if (!all_finite(logits)) throw InvalidInput("softmax_rows: non-finite logits");
  Tensor2 out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    detail::softmax_into(logits.row_span(i), out.row_span(i));
  }
  return out;
}

double entropy(const ProbVec& p) { return detail::entropy_of(p.values()); }

std::vector<double> entropy_rows(const Tensor2& probs) {
  std::vector<double> h(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) h[i] = detail::entropy_of(probs.row_span(i));
  return h;
}

double kl_div(const ProbVec& p, const ProbVec& q) {
  if (p.size() != q.size()) {
    throw ShapeError("kl_div: lengths " + std::to_string(p.size()) + " and " +
                     std::to_string(q.size()));
  }
  return detail::kl_of(p.values(), q.values());
}

double mse(const Tensor2& a, const Tensor2& b) {
  require_same_shape(a, b, "mse");
  if (a.size() == 0) return 0.0;
  double acc = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    acc += d * d;
  }
  return acc / static_cast<double>(av.size());
}

}  // namespace acr
