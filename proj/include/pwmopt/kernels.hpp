#pragma once

// Dense linear-algebra kernels used by the policy network and the optimizer.
//
// Every kernel has a scalar reference implementation and an AVX2/FMA variant.
// The active backend is chosen once at first use: AVX2 when the CPU reports
// avx2+fma, scalar otherwise. PWMOPT_SIMD=scalar|avx2|auto in the
// environment, or set_backend(), overrides the choice. The variants differ
// only in floating-point summation order.
//
// Matrices are row-major, `rows x cols`, contiguous.

#include <cstddef>
#include <span>
#include <string_view>

namespace pwmopt::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend backend);

bool avx2_available();
Backend active_backend();
/// Selects a backend; requesting Avx2 on a CPU without it throws
/// std::runtime_error.
void set_backend(Backend backend);

/// y = W x + bias
void gemv(std::span<const double> W, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<const double> bias, std::span<double> y);

/// dx = W^T dy
void gemv_t(std::span<const double> W, std::size_t rows, std::size_t cols,
            std::span<const double> dy, std::span<double> dx);

/// dW += alpha * dy x^T
void ger(std::span<double> dW, std::size_t rows, std::size_t cols, double alpha,
         std::span<const double> dy, std::span<const double> x);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> x, std::span<const double> y);

/// Raw per-backend entry points, exposed for equivalence testing.
struct KernelTable {
  void (*gemv)(const double* W, std::size_t rows, std::size_t cols, const double* x,
               const double* bias, double* y);
  void (*gemv_t)(const double* W, std::size_t rows, std::size_t cols, const double* dy,
                 double* dx);
  void (*ger)(double* dW, std::size_t rows, std::size_t cols, double alpha, const double* dy,
              const double* x);
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  double (*dot)(std::size_t n, const double* x, const double* y);
};

const KernelTable& scalar_table();
/// Null when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();

}  // namespace pwmopt::kernels
