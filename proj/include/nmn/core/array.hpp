#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nmn::core {

/// Dense row-major f64 matrix. A vector is stored as an (n x 1) array.
class Array {
 public:
  Array() = default;
  Array(std::size_t rows, std::size_t cols, double fill = 0.0);
  Array(std::size_t rows, std::size_t cols, std::vector<double> data);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool same_shape(const Array& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  [[nodiscard]] const double* data() const { return data_.data(); }
  std::span<double> flat() { return data_; }
  [[nodiscard]] std::span<const double> flat() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void fill(double value);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Small vector kernels shared by the layer code. All lengths must agree;
// callers check shapes once per layer rather than per call.

/// Dot product with four partial sums so the loop vectorises without -ffast-math.
double dot(const double* a, const double* b, std::size_t n);

/// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

/// y = W x (W is rows x cols, row-major)
void matvec(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);

/// y += W^T v
void matvec_t_acc(const double* w, std::size_t rows, std::size_t cols, const double* v, double* y);

/// G += v x^T
void outer_acc(const double* v, std::size_t rows, const double* x, std::size_t cols, double* g);

bool all_finite(std::span<const double> values);

}  // namespace nmn::core
