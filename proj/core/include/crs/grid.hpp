#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace crs {

// Dense row-major (design, context) table. Rows index designs, columns
// index contexts, matching the k x m layout used throughout the library.
template <typename T>
class Grid {
public:
  Grid() = default;

  Grid(int rows, int cols, T init = T{})
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), init) {
    if (rows < 0 || cols < 0) {
      throw std::invalid_argument("Grid dimensions must be non-negative");
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  bool in_range(int i, int j) const { return i >= 0 && i < rows_ && j >= 0 && j < cols_; }

  T& operator()(int i, int j) { return data_[index(i, j)]; }
  const T& operator()(int i, int j) const { return data_[index(i, j)]; }

  T& at(int i, int j) {
    check(i, j);
    return data_[index(i, j)];
  }
  const T& at(int i, int j) const {
    check(i, j);
    return data_[index(i, j)];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(j);
  }
  void check(int i, int j) const {
    if (!in_range(i, j)) {
      throw std::out_of_range("Grid index out of range");
    }
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using Matrix = Grid<double>;
using CountGrid = Grid<long long>;

}  // namespace crs
