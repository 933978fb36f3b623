// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense containers shared by all modules: a row-major matrix and an
// index for ragged per-group user counts.

#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace cfmm {

template <class T>
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  T& operator()(std::size_t i, std::size_t j) { return v_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return v_[i * cols_ + j];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return v_.empty(); }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  std::vector<T>& storage() { return v_; }
  const std::vector<T>& storage() const { return v_; }

  bool operator==(const Mat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && v_ == o.v_;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<T> v_;
};

// Maps (group, member) pairs to a flat index; groups may have unequal sizes.
struct GroupIndex {
  std::vector<int> sizes;
  std::vector<int> offsets;
  int total = 0;

  static GroupIndex from_sizes(std::vector<int> sizes_in) {
    GroupIndex g;
    g.sizes = std::move(sizes_in);
    g.offsets.resize(g.sizes.size());
    int off = 0;
    for (std::size_t m = 0; m < g.sizes.size(); ++m) {
      if (g.sizes[m] < 1) throw std::invalid_argument("group size must be >= 1");
      g.offsets[m] = off;
      off += g.sizes[m];
    }
    g.total = off;
    return g;
  }

  int count() const { return static_cast<int>(sizes.size()); }
  int size(int m) const { return sizes[m]; }
  int flat(int m, int k) const { return offsets[m] + k; }
};

}  // namespace cfmm
