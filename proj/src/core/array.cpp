#include "nmn/core/array.hpp"

#include <algorithm>
#include <cmath>

#include "nmn/core/errors.hpp"

namespace nmn::core {

Array::Array(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Array::Array(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("Array: data length does not match shape");
  }
}

void Array::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) {
    s0 += a[i] * b[i];
  }
  return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += alpha * x[i];
  }
}

void matvec(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot(w + r * cols, x, cols);
  }
}

void matvec_t_acc(const double* w, std::size_t rows, std::size_t cols, const double* v, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double vr = v[r];
    if (vr != 0.0) {
      axpy(vr, w + r * cols, y, cols);
    }
  }
}

void outer_acc(const double* v, std::size_t rows, const double* x, std::size_t cols, double* g) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double vr = v[r];
    if (vr != 0.0) {
      axpy(vr, x, g + r * cols, cols);
    }
  }
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace nmn::core
