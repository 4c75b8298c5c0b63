#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "tspulse/error.hpp"
#include "tspulse/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tspulse::kernels {
namespace {

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(__x86_64__) || defined(__i386__)
      return avx2::table() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
      return neon::table() != nullptr;
  }
  return false;
}

std::atomic<const KernelTable*> g_active{nullptr};
std::atomic<int> g_threads{1};

void transpose_into(const double* src, std::size_t rows, std::size_t cols, double* dst) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

}  // namespace

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  if (name == "neon") return Backend::neon;
  throw ArgumentError("unknown kernel backend '" + std::string(name) + "'");
}

bool available(Backend b) { return cpu_supports(b); }

const KernelTable& table(Backend b) {
  if (!available(b)) {
    throw CapabilityError(std::string("kernel backend '") + backend_name(b) +
                          "' is not available on this machine");
  }
  switch (b) {
    case Backend::avx2: return *avx2::table();
    case Backend::neon: return *neon::table();
    case Backend::scalar: break;
  }
  return scalar::table();
}

Backend detect_best() {
  if (const char* env = std::getenv("TSPULSE_KERNELS"); env && *env) {
    const Backend forced = parse_backend(env);
    if (available(forced)) return forced;
  }
  if (available(Backend::avx2)) return Backend::avx2;
  if (available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = &table(detect_best());
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void select(Backend b) { g_active.store(&table(b), std::memory_order_release); }

void set_num_threads(int n) { g_threads.store(std::max(1, n)); }
int num_threads() { return g_threads.load(); }

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double* c, bool accumulate) {
  if (m == 0 || n == 0) return;
  const KernelTable& kt = active();
  std::vector<double> at;
  std::vector<double> bt;
  if (trans_a) {
    // a is stored k x m
    at.resize(m * k);
    transpose_into(a, k, m, at.data());
    a = at.data();
  }
  if (trans_b) {
    // b is stored n x k
    bt.resize(k * n);
    transpose_into(b, n, k, bt.data());
    b = bt.data();
  }
  const int threads = num_threads();
  const double work = static_cast<double>(m) * static_cast<double>(n) * static_cast<double>(k);
  if (threads <= 1 || m < 8 || work < 2.0e5) {
    kt.gemm(m, n, k, a, k, b, n, c, n, accumulate);
    return;
  }
  // Split rows into blocks that are multiples of 4 so every block uses the
  // same register tiling regardless of the thread count.
  const std::size_t blocks = std::min<std::size_t>(static_cast<std::size_t>(threads), m / 4);
  const std::size_t per = ((m + blocks - 1) / blocks + 3) / 4 * 4;
#pragma omp parallel for num_threads(threads) schedule(static)
  for (long bi = 0; bi < static_cast<long>(blocks); ++bi) {
    const std::size_t r0 = static_cast<std::size_t>(bi) * per;
    if (r0 >= m) continue;
    const std::size_t rows = std::min(per, m - r0);
    kt.gemm(rows, n, k, a + r0 * k, k, b, n, c + r0 * n, n, accumulate);
  }
}

}  // namespace tspulse::kernels
