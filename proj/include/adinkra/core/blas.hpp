#pragma once

#include <cstdint>

namespace adinkra::core::blas {

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C.
// Dispatches to OpenBLAS when available, otherwise to a blocked loop.
void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n,
          std::int64_t k, float alpha, const float* a, std::int64_t lda,
          const float* b, std::int64_t ldb, float beta, float* c,
          std::int64_t ldc);

void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n,
          std::int64_t k, double alpha, const double* a, std::int64_t lda,
          const double* b, std::int64_t ldb, double beta, double* c,
          std::int64_t ldc);

// True when the OpenBLAS backend was loaded.
bool accelerated();

}  // namespace adinkra::core::blas
