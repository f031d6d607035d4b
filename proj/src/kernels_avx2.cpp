#include "stgc/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

// Compiled with -mavx2 -mfma on x86-64 only; never executed unless the CPU
// reports AVX2 support (see kernels.cpp).

namespace stgc::kernels {
namespace {

// Row-update fallback for tile remainders: C[i, j0:n) += A[i,:] * B[:, j0:n).
void matmul_rows_avx2(const double* a, const double* b, double* c, int m, int k,
                      int n, int j0, bool acc) {
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<std::size_t>(i) * n;
    if (!acc) std::fill(crow + j0, crow + n, 0.0);
    const double* arow = a + static_cast<std::size_t>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
      const __m256d avv = _mm256_set1_pd(arow[kk]);
      const double* brow = b + static_cast<std::size_t>(kk) * n;
      int j = j0;
      for (; j + 4 <= n; j += 4) {
        __m256d cv = _mm256_loadu_pd(crow + j);
        cv = _mm256_fmadd_pd(avv, _mm256_loadu_pd(brow + j), cv);
        _mm256_storeu_pd(crow + j, cv);
      }
      for (; j < n; ++j) crow[j] = std::fma(arow[kk], brow[j], crow[j]);
    }
  }
}

// 4x8 register-tiled kernel: accumulators live in YMM registers across the
// whole k loop, so the inner iteration is 2 B loads + 4 broadcasts + 8 FMAs
// with no C traffic.  Each element still accumulates over k in index order,
// so rounding behaviour matches the plain row-update form above.
void matmul_avx2(const double* a, const double* b, double* c, int m, int k,
                 int n, bool acc) {
  const std::size_t an = static_cast<std::size_t>(k), cn = static_cast<std::size_t>(n);
  int j0 = 0;
  for (; j0 + 8 <= n; j0 += 8) {
    int i0 = 0;
    for (; i0 + 4 <= m; i0 += 4) {
      const double *a0 = a + (i0 + 0) * an, *a1 = a + (i0 + 1) * an;
      const double *a2 = a + (i0 + 2) * an, *a3 = a + (i0 + 3) * an;
      double *c0 = c + (i0 + 0) * cn + j0, *c1 = c + (i0 + 1) * cn + j0;
      double *c2 = c + (i0 + 2) * cn + j0, *c3 = c + (i0 + 3) * cn + j0;
      __m256d s00, s01, s10, s11, s20, s21, s30, s31;
      if (acc) {
        s00 = _mm256_loadu_pd(c0), s01 = _mm256_loadu_pd(c0 + 4);
        s10 = _mm256_loadu_pd(c1), s11 = _mm256_loadu_pd(c1 + 4);
        s20 = _mm256_loadu_pd(c2), s21 = _mm256_loadu_pd(c2 + 4);
        s30 = _mm256_loadu_pd(c3), s31 = _mm256_loadu_pd(c3 + 4);
      } else {
        s00 = s01 = s10 = s11 = s20 = s21 = s30 = s31 = _mm256_setzero_pd();
      }
      const double* brow = b + j0;
      for (int kk = 0; kk < k; ++kk, brow += cn) {
        const __m256d b0 = _mm256_loadu_pd(brow);
        const __m256d b1 = _mm256_loadu_pd(brow + 4);
        __m256d av = _mm256_set1_pd(a0[kk]);
        s00 = _mm256_fmadd_pd(av, b0, s00);
        s01 = _mm256_fmadd_pd(av, b1, s01);
        av = _mm256_set1_pd(a1[kk]);
        s10 = _mm256_fmadd_pd(av, b0, s10);
        s11 = _mm256_fmadd_pd(av, b1, s11);
        av = _mm256_set1_pd(a2[kk]);
        s20 = _mm256_fmadd_pd(av, b0, s20);
        s21 = _mm256_fmadd_pd(av, b1, s21);
        av = _mm256_set1_pd(a3[kk]);
        s30 = _mm256_fmadd_pd(av, b0, s30);
        s31 = _mm256_fmadd_pd(av, b1, s31);
      }
      _mm256_storeu_pd(c0, s00), _mm256_storeu_pd(c0 + 4, s01);
      _mm256_storeu_pd(c1, s10), _mm256_storeu_pd(c1 + 4, s11);
      _mm256_storeu_pd(c2, s20), _mm256_storeu_pd(c2 + 4, s21);
      _mm256_storeu_pd(c3, s30), _mm256_storeu_pd(c3 + 4, s31);
    }
    for (; i0 < m; ++i0) {
      const double* arow = a + i0 * an;
      double* crow = c + i0 * cn + j0;
      __m256d s0, s1;
      if (acc) {
        s0 = _mm256_loadu_pd(crow), s1 = _mm256_loadu_pd(crow + 4);
      } else {
        s0 = s1 = _mm256_setzero_pd();
      }
      const double* brow = b + j0;
      for (int kk = 0; kk < k; ++kk, brow += cn) {
        const __m256d av = _mm256_set1_pd(arow[kk]);
        s0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), s0);
        s1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), s1);
      }
      _mm256_storeu_pd(crow, s0), _mm256_storeu_pd(crow + 4, s1);
    }
  }
  if (j0 < n) matmul_rows_avx2(a, b, c, m, k, n, j0, acc);
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void scale_avx2(double alpha, const double* x, double* out, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = alpha * x[i];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double lanes[4];
  _mm256_storeu_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s = std::fma(a[i], b[i], s);
  return s;
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops = {matmul_avx2, add_avx2, sub_avx2, mul_avx2,
                          axpy_avx2,  scale_avx2, dot_avx2, "avx2"};
  return ops;
}

}  // namespace stgc::kernels
