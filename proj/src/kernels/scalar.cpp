// Scalar reference kernels. These define the semantics the SIMD variants are
// tested against.

#include "pwmopt/kernels.hpp"

namespace pwmopt::kernels {

namespace {

void gemv_scalar(const double* W, std::size_t rows, std::size_t cols, const double* x,
                 const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = W + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc + bias[r];
  }
}

void gemv_t_scalar(const double* W, std::size_t rows, std::size_t cols, const double* dy,
                   double* dx) {
  for (std::size_t c = 0; c < cols; ++c) dx[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = W + r * cols;
    const double d = dy[r];
    for (std::size_t c = 0; c < cols; ++c) dx[c] += row[c] * d;
  }
}

void ger_scalar(double* dW, std::size_t rows, std::size_t cols, double alpha, const double* dy,
                const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = dW + r * cols;
    const double a = alpha * dy[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += a * x[c];
  }
}

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

constexpr KernelTable kScalar{gemv_scalar, gemv_t_scalar, ger_scalar, axpy_scalar, dot_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace pwmopt::kernels
