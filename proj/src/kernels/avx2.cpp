// AVX2 + FMA kernels. This file is compiled with -mavx2 -mfma and only
// reached after a runtime CPU check.

#include "tspulse/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace tspulse::kernels::avx2 {
namespace {

// MR rows x 8 columns register block.
template <int MR>
inline void block_x8(std::size_t k, const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  __m256d lo[MR];
  __m256d hi[MR];
  for (int r = 0; r < MR; ++r) {
    lo[r] = _mm256_setzero_pd();
    hi[r] = _mm256_setzero_pd();
  }
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
    for (int r = 0; r < MR; ++r) {
      const __m256d av = _mm256_broadcast_sd(a + r * lda + p);
      lo[r] = _mm256_fmadd_pd(av, b0, lo[r]);
      hi[r] = _mm256_fmadd_pd(av, b1, hi[r]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    double* crow = c + r * ldc;
    if (accumulate) {
      lo[r] = _mm256_add_pd(_mm256_loadu_pd(crow), lo[r]);
      hi[r] = _mm256_add_pd(_mm256_loadu_pd(crow + 4), hi[r]);
    }
    _mm256_storeu_pd(crow, lo[r]);
    _mm256_storeu_pd(crow + 4, hi[r]);
  }
}

template <int MR>
inline void block_x4(std::size_t k, const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  __m256d acc[MR];
  for (int r = 0; r < MR; ++r) acc[r] = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    for (int r = 0; r < MR; ++r) {
      acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + r * lda + p), b0, acc[r]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    double* crow = c + r * ldc;
    if (accumulate) acc[r] = _mm256_add_pd(_mm256_loadu_pd(crow), acc[r]);
    _mm256_storeu_pd(crow, acc[r]);
  }
}

template <int MR>
inline void block_x1(std::size_t k, const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  for (int r = 0; r < MR; ++r) {
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s = __builtin_fma(a[r * lda + p], b[p * ldb], s);
    c[r * ldc] = accumulate ? c[r * ldc] + s : s;
  }
}

template <int MR>
inline void row_panel(std::size_t n, std::size_t k, const double* a, std::size_t lda,
                      const double* b, std::size_t ldb, double* c, std::size_t ldc,
                      bool accumulate) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) block_x8<MR>(k, a, lda, b + j, ldb, c + j, ldc, accumulate);
  for (; j + 4 <= n; j += 4) block_x4<MR>(k, a, lda, b + j, ldb, c + j, ldc, accumulate);
  for (; j < n; ++j) block_x1<MR>(k, a, lda, b + j, ldb, c + j, ldc, accumulate);
}

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    row_panel<4>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate);
  }
  switch (m - i) {
    case 3: row_panel<3>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate); break;
    case 2: row_panel<2>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate); break;
    case 1: row_panel<1>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate); break;
    default: break;
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(s0, s1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s = __builtin_fma(x[i], y[i], s);
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = __builtin_fma(alpha, x[i], y[i]);
}

const KernelTable kTable{Backend::avx2, "avx2", &gemm, &dot, &axpy};

}  // namespace

const KernelTable* table() { return &kTable; }

}  // namespace tspulse::kernels::avx2

#else

namespace tspulse::kernels::avx2 {
const KernelTable* table() { return nullptr; }
}  // namespace tspulse::kernels::avx2

#endif
