#pragma once

#include <vector>

#include "adinkra/core/tensor.hpp"

namespace adinkra::core::reference {

// Direct nested-loop 3x3 convolution, kept deliberately naive and
// independent of the GEMM-based path so the two can be checked against
// each other. Inputs are raw value vectors, not graph tensors.
template <typename T>
std::vector<T> conv2d_direct(const std::vector<T>& x, std::int64_t n,
                             std::int64_t cin, std::int64_t h, std::int64_t w,
                             const std::vector<T>& weight, std::int64_t cout,
                             const std::vector<T>& bias, int pad) {
  const std::int64_t hout = h + 2 * pad - 2;
  const std::int64_t wout = w + 2 * pad - 2;
  std::vector<T> y(static_cast<std::size_t>(n * cout * hout * wout), T(0));
  for (std::int64_t img = 0; img < n; ++img)
    for (std::int64_t k = 0; k < cout; ++k)
      for (std::int64_t i = 0; i < hout; ++i)
        for (std::int64_t j = 0; j < wout; ++j) {
          T acc = bias[static_cast<std::size_t>(k)];
          for (std::int64_t c = 0; c < cin; ++c)
            for (int u = 0; u < 3; ++u)
              for (int v = 0; v < 3; ++v) {
                const std::int64_t si = i + u - pad;
                const std::int64_t sj = j + v - pad;
                if (si < 0 || si >= h || sj < 0 || sj >= w) continue;
                acc += x[static_cast<std::size_t>(
                           ((img * cin + c) * h + si) * w + sj)] *
                       weight[static_cast<std::size_t>(
                           ((k * cin + c) * 3 + u) * 3 + v)];
              }
          y[static_cast<std::size_t>(((img * cout + k) * hout + i) * wout +
                                     j)] = acc;
        }
  return y;
}

// Naive triple-loop matrix product for checking the BLAS wrapper:
// c[m x n] = a[m x k] * b[k x n], all row-major and dense.
template <typename T>
std::vector<T> matmul_direct(const std::vector<T>& a, const std::vector<T>& b,
                             std::int64_t m, std::int64_t k, std::int64_t n) {
  std::vector<T> c(static_cast<std::size_t>(m * n), T(0));
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t p = 0; p < k; ++p)
      for (std::int64_t j = 0; j < n; ++j)
        c[static_cast<std::size_t>(i * n + j)] +=
            a[static_cast<std::size_t>(i * k + p)] *
            b[static_cast<std::size_t>(p * n + j)];
  return c;
}

}  // namespace adinkra::core::reference
