#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "pwmopt/kernels.hpp"

namespace pwmopt::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const bool avx2 = avx2_available();
  const char* env = std::getenv("PWMOPT_SIMD");
  const std::string choice = env ? env : "auto";
  if (choice == "scalar") return &scalar_table();
  if (choice == "avx2" && !avx2) {
    throw std::runtime_error("PWMOPT_SIMD=avx2 requested but AVX2/FMA is unavailable");
  }
  return avx2 ? avx2_table() : &scalar_table();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

const KernelTable& table() { return *active().load(std::memory_order_acquire); }

}  // namespace

std::string_view to_string(Backend backend) {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool avx2_available() {
  static const bool available = avx2_table() != nullptr && cpu_has_avx2();
  return available;
}

Backend active_backend() {
  return &table() == &scalar_table() ? Backend::Scalar : Backend::Avx2;
}

void set_backend(Backend backend) {
  if (backend == Backend::Avx2) {
    if (!avx2_available()) throw std::runtime_error("AVX2 backend unavailable on this CPU");
    active().store(avx2_table(), std::memory_order_release);
  } else {
    active().store(&scalar_table(), std::memory_order_release);
  }
}

void gemv(std::span<const double> W, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<const double> bias, std::span<double> y) {
  table().gemv(W.data(), rows, cols, x.data(), bias.data(), y.data());
}

void gemv_t(std::span<const double> W, std::size_t rows, std::size_t cols,
            std::span<const double> dy, std::span<double> dx) {
  table().gemv_t(W.data(), rows, cols, dy.data(), dx.data());
}

void ger(std::span<double> dW, std::size_t rows, std::size_t cols, double alpha,
         std::span<const double> dy, std::span<const double> x) {
  table().ger(dW.data(), rows, cols, alpha, dy.data(), x.data());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  table().axpy(x.size(), alpha, x.data(), y.data());
}

double dot(std::span<const double> x, std::span<const double> y) {
  return table().dot(x.size(), x.data(), y.data());
}

}  // namespace pwmopt::kernels
