#include "adinkra/core/blas.hpp"

#include <dlfcn.h>

#include <cstdlib>
#include <mutex>

namespace adinkra::core::blas {
namespace {

// cblas enums, matching cblas.h.
enum CblasOrder { kRowMajor = 101 };
enum CblasTranspose { kNoTrans = 111, kTrans = 112 };

using SgemmFn = void (*)(int order, int trans_a, int trans_b, int m, int n,
                         int k, float alpha, const float* a, int lda,
                         const float* b, int ldb, float beta, float* c,
                         int ldc);
using DgemmFn = void (*)(int order, int trans_a, int trans_b, int m, int n,
                         int k, double alpha, const double* a, int lda,
                         const double* b, int ldb, double beta, double* c,
                         int ldc);

struct Backend {
  SgemmFn sgemm = nullptr;
  DgemmFn dgemm = nullptr;
};

// OpenBLAS picks its kernel from cpuid in a library constructor, and
// virtualized CPUs often mask the model bits, which lands on a slow
// generic kernel. Loading the library lazily lets us pin the kernel via
// OPENBLAS_CORETYPE first. An explicit user setting always wins.
Backend load_backend() {
  Backend be;
  if (!std::getenv("OPENBLAS_CORETYPE")) {
#if defined(__x86_64__)
    if (__builtin_cpu_supports("avx512f"))
      setenv("OPENBLAS_CORETYPE", "SAPPHIRERAPIDS", 0);
    else if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
      setenv("OPENBLAS_CORETYPE", "HASWELL", 0);
#endif
  }
  void* handle = nullptr;
  for (const char* name :
       {"libopenblas.so.0", "libopenblas.so", "libopenblas.so.0.3"}) {
    handle = dlopen(name, RTLD_NOW | RTLD_LOCAL);
    if (handle) break;
  }
  if (!handle) return be;
  be.sgemm = reinterpret_cast<SgemmFn>(dlsym(handle, "cblas_sgemm"));
  be.dgemm = reinterpret_cast<DgemmFn>(dlsym(handle, "cblas_dgemm"));
  if (!be.sgemm || !be.dgemm) be = Backend{};
  return be;
}

const Backend& backend() {
  static Backend be = load_backend();
  return be;
}

// Fallback path: straightforward blocked loops, correct for any size.
template <typename T>
void gemm_loops(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n,
                std::int64_t k, T alpha, const T* a, std::int64_t lda,
                const T* b, std::int64_t ldb, T beta, T* c, std::int64_t ldc) {
  for (std::int64_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      for (std::int64_t j = 0; j < n; ++j) crow[j] = T(0);
    } else if (beta != T(1)) {
      for (std::int64_t j = 0; j < n; ++j) crow[j] *= beta;
    }
    for (std::int64_t p = 0; p < k; ++p) {
      const T av = alpha * (trans_a ? a[p * lda + i] : a[i * lda + p]);
      if (av == T(0)) continue;
      if (!trans_b) {
        const T* brow = b + p * ldb;
        for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (std::int64_t j = 0; j < n; ++j) crow[j] += av * b[j * ldb + p];
      }
    }
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n,
          std::int64_t k, float alpha, const float* a, std::int64_t lda,
          const float* b, std::int64_t ldb, float beta, float* c,
          std::int64_t ldc) {
  const Backend& be = backend();
  if (be.sgemm) {
    be.sgemm(kRowMajor, trans_a ? kTrans : kNoTrans,
             trans_b ? kTrans : kNoTrans, static_cast<int>(m),
             static_cast<int>(n), static_cast<int>(k), alpha, a,
             static_cast<int>(lda), b, static_cast<int>(ldb), beta, c,
             static_cast<int>(ldc));
    return;
  }
  gemm_loops(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n,
          std::int64_t k, double alpha, const double* a, std::int64_t lda,
          const double* b, std::int64_t ldb, double beta, double* c,
          std::int64_t ldc) {
  const Backend& be = backend();
  if (be.dgemm) {
    be.dgemm(kRowMajor, trans_a ? kTrans : kNoTrans,
             trans_b ? kTrans : kNoTrans, static_cast<int>(m),
             static_cast<int>(n), static_cast<int>(k), alpha, a,
             static_cast<int>(lda), b, static_cast<int>(ldb), beta, c,
             static_cast<int>(ldc));
    return;
  }
  gemm_loops(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

bool accelerated() { return backend().sgemm != nullptr; }

}  // namespace adinkra::core::blas
