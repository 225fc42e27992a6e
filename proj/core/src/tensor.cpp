#include "acr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acr/error.hpp"

namespace acr {

namespace {

std::string shape_str(const Tensor2& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("Tensor2: data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Tensor2 Tensor2::row(std::initializer_list<double> values) {
  return Tensor2(1, values.size(), std::vector<double>(values));
}

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Tensor2::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor2(r, c, std::move(data));
}

Tensor2 Tensor2::identity(std::size_t n) {
  Tensor2 t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor2 Tensor2::row_copy(std::size_t r) const {
  if (r >= rows_) throw ShapeError("Tensor2::row_copy: row out of range");
  auto src = row_span(r);
  return Tensor2(1, cols_, std::vector<double>(src.begin(), src.end()));
}

Tensor2 Tensor2::select_rows(std::span<const std::size_t> indices) const {
  Tensor2 out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw ShapeError("Tensor2::select_rows: index out of range");
    auto src = row_span(indices[i]);
    std::copy(src.begin(), src.end(), out.row_span(i).begin());
  }
  return out;
}

void Tensor2::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

Tensor2& Tensor2::operator+=(const Tensor2& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor2& Tensor2::operator-=(const Tensor2& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor2& Tensor2::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

bool same_shape(const Tensor2& a, const Tensor2& b) noexcept {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

bool all_finite(const Tensor2& a) noexcept {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor2& a, const Tensor2& b, const char* op) {
  if (!same_shape(a, b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " · " + shape_str(b));
  }
  Tensor2 out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row_span(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row_span(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Tensor2 matmul_bt(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_bt: " + shape_str(a) + " · " + shape_str(b) + "ᵀ");
  }
  Tensor2 out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto a_row = a.row_span(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto b_row = b.row_span(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a_row[k] * b_row[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Tensor2 matmul_at(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_at: " + shape_str(a) + "ᵀ · " + shape_str(b));
  }
  Tensor2 out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row_span(k);
    auto b_row = b.row_span(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row_span(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

Tensor2 add(const Tensor2& a, const Tensor2& b) {
  Tensor2 out = a;
  out += b;
  return out;
}

Tensor2 subtract(const Tensor2& a, const Tensor2& b) {
  Tensor2 out = a;
  out -= b;
  return out;
}

Tensor2 scale(const Tensor2& a, double s) {
  Tensor2 out = a;
  out *= s;
  return out;
}

Tensor2 add_row(const Tensor2& a, const Tensor2& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row: " + shape_str(a) + " + " + shape_str(row));
  }
  Tensor2 out = a;
  auto r = row.row_span(0);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto o = out.row_span(i);
    for (std::size_t j = 0; j < out.cols(); ++j) o[j] += r[j];
  }
  return out;
}

Tensor2 sum_rows(const Tensor2& a) {
  Tensor2 out(1, a.cols());
  auto o = out.row_span(0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row_span(i);
    for (std::size_t j = 0; j < a.cols(); ++j) o[j] += r[j];
  }
  return out;
}

Tensor2 vstack(const Tensor2& top, const Tensor2& bottom) {
  if (top.empty() && top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  if (top.cols() != bottom.cols()) {
    throw ShapeError("vstack: " + shape_str(top) + " over " + shape_str(bottom));
  }
  std::vector<double> data(top.values().begin(), top.values().end());
  data.insert(data.end(), bottom.values().begin(), bottom.values().end());
  return Tensor2(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

Tensor2 relu(const Tensor2& a) {
  Tensor2 out = a;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor2 relu_grad(const Tensor2& pre_activation, const Tensor2& upstream) {
  require_same_shape(pre_activation, upstream, "relu_grad");
  Tensor2 out = upstream;
  auto pre = pre_activation.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (!(pre[i] > 0.0)) o[i] = 0.0;
  }
  return out;
}

}  // namespace acr
