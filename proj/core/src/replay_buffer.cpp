#include "acr/replay_buffer.hpp"

#include <algorithm>
#include <string>

#include "acr/error.hpp"

namespace acr {

ReplayBuffer::ReplayBuffer(std::size_t dim, std::size_t capacity, std::size_t k)
    : dim_(dim), capacity_(capacity), k_(k) {
  if (capacity_ == 0) throw InvalidInput("ReplayBuffer: capacity must be >= 1");
  if (k_ == 0) throw InvalidInput("ReplayBuffer: k must be >= 1");
}

void ReplayBuffer::update(const Tensor2& rows, std::int64_t step) {
  if (rows.rows() == 0) return;
  if (rows.cols() != dim_) {
    throw ShapeError("ReplayBuffer::update: row dim " + std::to_string(rows.cols()) +
                     ", buffer dim " + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    auto r = rows.row_span(i);
    entries_.push_back({std::vector<double>(r.begin(), r.end()), step});
    if (entries_.size() > capacity_) entries_.pop_front();
  }
}

Tensor2 ReplayBuffer::get_last_k() const {
  const std::size_t count = std::min(k_, entries_.size());
  Tensor2 out(count, dim_);
  const std::size_t first = entries_.size() - count;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& row = entries_[first + i].row;
    std::copy(row.begin(), row.end(), out.row_span(i).begin());
  }
  return out;
}

ReplayBuffer::Fetch ReplayBuffer::update_and_fetch(const Tensor2& rows, std::int64_t step) {
  update(rows, step);
  Fetch f;
  f.rows = get_last_k();
  f.live = std::min(rows.rows(), f.rows.rows());
  return f;
}

}  // namespace acr
