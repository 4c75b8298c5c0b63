// NEON kernels for AArch64 (float64x2_t lanes).

#include "tspulse/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

namespace tspulse::kernels::neon {
namespace {

template <int MR>
inline void block_x4(std::size_t k, const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  float64x2_t lo[MR];
  float64x2_t hi[MR];
  for (int r = 0; r < MR; ++r) {
    lo[r] = vdupq_n_f64(0.0);
    hi[r] = vdupq_n_f64(0.0);
  }
  for (std::size_t p = 0; p < k; ++p) {
    const float64x2_t b0 = vld1q_f64(b + p * ldb);
    const float64x2_t b1 = vld1q_f64(b + p * ldb + 2);
    for (int r = 0; r < MR; ++r) {
      const float64x2_t av = vdupq_n_f64(a[r * lda + p]);
      lo[r] = vfmaq_f64(lo[r], av, b0);
      hi[r] = vfmaq_f64(hi[r], av, b1);
    }
  }
  for (int r = 0; r < MR; ++r) {
    double* crow = c + r * ldc;
    if (accumulate) {
      lo[r] = vaddq_f64(vld1q_f64(crow), lo[r]);
      hi[r] = vaddq_f64(vld1q_f64(crow + 2), hi[r]);
    }
    vst1q_f64(crow, lo[r]);
    vst1q_f64(crow + 2, hi[r]);
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
  for (; j + 4 <= n; j += 4) block_x4<MR>(k, a, lda, b + j, ldb, c + j, ldc, accumulate);
  for (; j < n; ++j) block_x1<MR>(k, a, lda, b + j, ldb, c + j, ldc, accumulate);
}

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    row_panel<4>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate);
  }
  for (; i < m; ++i) row_panel<1>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc, accumulate);
}

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t s = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) s = vfmaq_f64(s, vld1q_f64(x + i), vld1q_f64(y + i));
  double r = vgetq_lane_f64(s, 0) + vgetq_lane_f64(s, 1);
  for (; i < n; ++i) r = __builtin_fma(x[i], y[i], r);
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] = __builtin_fma(alpha, x[i], y[i]);
}

const KernelTable kTable{Backend::neon, "neon", &gemm, &dot, &axpy};

}  // namespace

const KernelTable* table() { return &kTable; }

}  // namespace tspulse::kernels::neon

#else

namespace tspulse::kernels::neon {
const KernelTable* table() { return nullptr; }
}  // namespace tspulse::kernels::neon

#endif
