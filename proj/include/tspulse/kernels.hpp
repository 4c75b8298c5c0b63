#pragma once

// Inner-loop arithmetic kernels. Every kernel has a scalar reference
// implementation; SIMD variants (AVX2+FMA on x86-64, NEON on AArch64) are
// compiled into separate translation units and selected at runtime.

#include <cstddef>
#include <string_view>

namespace tspulse::kernels {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  Backend backend;
  const char* name;
  /// C[m x n] = (accumulate ? C : 0) + A[m x k] * B[k x n]; row-major, leading dims given.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

namespace scalar {
const KernelTable& table();
}
namespace avx2 {
/// nullptr when the translation unit was built without AVX2 support.
const KernelTable* table();
}
namespace neon {
const KernelTable* table();
}

const char* backend_name(Backend b);
Backend parse_backend(std::string_view name);

/// True when the backend was compiled in and the running CPU supports it.
bool available(Backend b);
/// Throws CapabilityError when the backend is unavailable.
const KernelTable& table(Backend b);
/// Best available backend, honouring the TSPULSE_KERNELS environment override.
Backend detect_best();

const KernelTable& active();
void select(Backend b);

/// Threads used to split large gemm calls by output rows. Each output element
/// is produced by exactly one thread in a fixed order, so results do not
/// depend on the thread count.
void set_num_threads(int n);
int num_threads();

/// Row-major gemm with optional transposes, dispatched to the active table.
/// op(A) is m x k, op(B) is k x n, C is m x n with leading dimension n.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double* c, bool accumulate);

}  // namespace tspulse::kernels
