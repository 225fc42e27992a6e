#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "acr/tensor.hpp"

namespace acr {

// Bounded FIFO of detached representation rows. Rows are copied in, so
// nothing stored here aliases live activations.
class ReplayBuffer {
 public:
  struct Entry {
    std::vector<double> row;
    std::int64_t step = 0;
  };

  // The most recent rows after an update. The trailing `live` rows are the
  // ones that came from that update, in their original order.
  struct Fetch {
    Tensor2 rows;
    std::size_t live = 0;
  };

  ReplayBuffer(std::size_t dim, std::size_t capacity = 256, std::size_t k = 64);

  // Appends every row, evicting the oldest entries past capacity.
  void update(const Tensor2& rows, std::int64_t step);
  // The min(k, size) most recent rows, oldest first.
  Tensor2 get_last_k() const;
  Fetch update_and_fetch(const Tensor2& rows, std::int64_t step);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::deque<Entry>& entries() const noexcept { return entries_; }
  void clear() noexcept { entries_.clear(); }

 private:
  std::size_t dim_;
  std::size_t capacity_;
  std::size_t k_;
  std::deque<Entry> entries_;
};

}  // namespace acr
