#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tabinfill {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  Matrix select_rows(std::span<const std::size_t> rows) const {
    Matrix m(rows.size(), cols_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto src = row(rows[i]);
      std::copy(src.begin(), src.end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
    }
    return m;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace tabinfill
