#pragma once

// Low-level f64 kernels with a scalar reference implementation and an AVX2
// variant selected at runtime.  Everything above this layer is kernel-agnostic.

#include <cstddef>
#include <string>

namespace stgc::kernels {

// ---------------------------------------------------------------- dispatch --

struct Ops {
  // c[m x n] = a[m x k] * b[k x n]; accumulates into c when acc is true.
  void (*matmul)(const double* a, const double* b, double* c, int m, int k,
                 int n, bool acc);
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, const double* x, double* out, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  const char* name;
};

const Ops& scalar_ops();
bool avx2_supported();      // true when the CPU can run the AVX2 variant
const Ops& avx2_ops();      // valid only when avx2_supported()

// Active implementation.  Chosen once per process: AVX2 when supported, else
// scalar; the STGC_SIMD environment variable ("scalar" or "avx2") overrides.
const Ops& active();
std::string active_name();

// ------------------------------------------------------- scalar-only utils --

// at[cols x rows] = transpose of a[rows x cols]
void transpose(const double* a, double* at, int rows, int cols);

}  // namespace stgc::kernels
