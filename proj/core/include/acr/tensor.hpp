#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace acr {

// Dense row-major matrix of doubles. Rows are examples, columns are
// features/classes throughout the library.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor2 row(std::initializer_list<double> values);
  static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor2 identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> row_span(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row_span(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  Tensor2 row_copy(std::size_t r) const;
  Tensor2 select_rows(std::span<const std::size_t> indices) const;
  void fill(double value) noexcept;

  Tensor2& operator+=(const Tensor2& other);
  Tensor2& operator-=(const Tensor2& other);
  Tensor2& operator*=(double s) noexcept;

  bool operator==(const Tensor2& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

bool same_shape(const Tensor2& a, const Tensor2& b) noexcept;
bool all_finite(const Tensor2& a) noexcept;

Tensor2 matmul(const Tensor2& a, const Tensor2& b);
// a · bᵀ
Tensor2 matmul_bt(const Tensor2& a, const Tensor2& b);
// aᵀ · b
Tensor2 matmul_at(const Tensor2& a, const Tensor2& b);

Tensor2 add(const Tensor2& a, const Tensor2& b);
Tensor2 subtract(const Tensor2& a, const Tensor2& b);
Tensor2 scale(const Tensor2& a, double s);
// Adds a 1×cols row to every row of a.
Tensor2 add_row(const Tensor2& a, const Tensor2& row);
Tensor2 sum_rows(const Tensor2& a);
Tensor2 vstack(const Tensor2& top, const Tensor2& bottom);

Tensor2 relu(const Tensor2& a);
// upstream ⊙ 1[pre > 0]; the subgradient at exactly 0 is taken as 0.
Tensor2 relu_grad(const Tensor2& pre_activation, const Tensor2& upstream);

void require_same_shape(const Tensor2& a, const Tensor2& b, const char* op);

}  // namespace acr
