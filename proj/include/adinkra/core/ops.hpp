#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "adinkra/core/blas.hpp"
#include "adinkra/core/rng.hpp"
#include "adinkra/core/tape.hpp"
#include "adinkra/core/tensor.hpp"

namespace adinkra::core {

using blas::gemm;

namespace detail {

// Unit-interval hash used by dropout so the mask never has to be stored:
// the backward pass recomputes it from (seed, element index).
inline double element_unit(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t h = hash_combine(seed, index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Lays out 3x3 patches of one C x H x W image as a (C*9) x (Hout*Wout)
// matrix, row r = (c*3+u)*3+v, column = output pixel in row-major order.
// Out-of-bounds taps are zero. stride is fixed at 1 by the callers.
template <typename T>
void im2col3x3(const T* x, std::int64_t c_in, std::int64_t h, std::int64_t w,
               int pad, T* col) {
  const std::int64_t hout = h + 2 * pad - 2;
  const std::int64_t wout = w + 2 * pad - 2;
  for (std::int64_t c = 0; c < c_in; ++c) {
    for (int u = 0; u < 3; ++u) {
      for (int v = 0; v < 3; ++v) {
        const std::int64_t r = (c * 3 + u) * 3 + v;
        for (std::int64_t i = 0; i < hout; ++i) {
          T* dst = col + (r * hout + i) * wout;
          const std::int64_t si = i + u - pad;
          if (si < 0 || si >= h) {
            std::fill(dst, dst + wout, T(0));
            continue;
          }
          const std::int64_t sj0 = v - pad;
          const std::int64_t j0 = std::max<std::int64_t>(0, -sj0);
          const std::int64_t j1 = std::min<std::int64_t>(wout, w - sj0);
          const T* src = x + (c * h + si) * w + sj0;
          if (j0 > 0) std::fill(dst, dst + j0, T(0));
          if (j1 > j0) std::memcpy(dst + j0, src + j0, sizeof(T) * (j1 - j0));
          if (j1 < wout) std::fill(dst + std::max(j0, j1), dst + wout, T(0));
        }
      }
    }
  }
}

// Adjoint of im2col3x3: scatters patch-matrix gradients back onto the
// image, accumulating where patches overlap.
template <typename T>
void col2im3x3_add(const T* col, std::int64_t c_in, std::int64_t h,
                   std::int64_t w, int pad, T* dx) {
  const std::int64_t hout = h + 2 * pad - 2;
  const std::int64_t wout = w + 2 * pad - 2;
  for (std::int64_t c = 0; c < c_in; ++c) {
    for (int u = 0; u < 3; ++u) {
      for (int v = 0; v < 3; ++v) {
        const std::int64_t r = (c * 3 + u) * 3 + v;
        for (std::int64_t i = 0; i < hout; ++i) {
          const T* src = col + (r * hout + i) * wout;
          const std::int64_t si = i + u - pad;
          if (si < 0 || si >= h) continue;
          const std::int64_t sj0 = v - pad;
          const std::int64_t j0 = std::max<std::int64_t>(0, -sj0);
          const std::int64_t j1 = std::min<std::int64_t>(wout, w - sj0);
          T* dst = dx + (c * h + si) * w + sj0;
          for (std::int64_t j = j0; j < j1; ++j) dst[j] += src[j];
        }
      }
    }
  }
}

inline void check_ndim(const char* op, const char* arg, std::size_t got,
                       std::size_t want) {
  if (got != want)
    throw PreconditionError(std::string(op) + ": " + arg + " must have " +
                            std::to_string(want) + " dims, got " +
                            std::to_string(got));
}

}  // namespace detail

// 2-D convolution of NCHW input with Cout x Cin x 3 x 3 filters.
// Only 3x3 kernels, stride 1 and padding 0 or 1 are supported; anything
// else is rejected rather than silently approximated. Implemented as
// per-image im2col + GEMM; the backward pass recomputes the patch matrix
// instead of keeping it alive between passes.
template <typename T>
TensorPtr<T> conv2d(Tape<T>& tape, const TensorPtr<T>& x,
                    const TensorPtr<T>& w, const TensorPtr<T>& b, int pad = 1,
                    int stride = 1) {
  detail::check_ndim("conv2d", "input", x->ndim(), 4);
  detail::check_ndim("conv2d", "weight", w->ndim(), 4);
  detail::check_ndim("conv2d", "bias", b->ndim(), 1);
  if (stride != 1)
    throw ConfigError("conv2d: only stride 1 is supported, got " +
                      std::to_string(stride));
  if (w->dim(2) != 3 || w->dim(3) != 3)
    throw ConfigError("conv2d: only 3x3 kernels are supported, got " +
                      std::to_string(w->dim(2)) + "x" +
                      std::to_string(w->dim(3)));
  if (pad != 0 && pad != 1)
    throw PreconditionError("conv2d: padding must be 0 or 1, got " +
                            std::to_string(pad));
  const std::int64_t n = x->dim(0), cin = x->dim(1), h = x->dim(2),
                     wd = x->dim(3);
  const std::int64_t cout = w->dim(0);
  if (w->dim(1) != cin)
    throw PreconditionError("conv2d: weight expects " +
                            std::to_string(w->dim(1)) + " input channels, got " +
                            std::to_string(cin));
  if (b->dim(0) != cout)
    throw PreconditionError("conv2d: bias size " + std::to_string(b->dim(0)) +
                            " does not match " + std::to_string(cout) +
                            " output channels");
  const std::int64_t hout = h + 2 * pad - 2;
  const std::int64_t wout = wd + 2 * pad - 2;
  if (hout <= 0 || wout <= 0)
    throw PreconditionError("conv2d: output would be empty for input " +
                            shape_str(x->shape()) + " with padding " +
                            std::to_string(pad));

  auto y = make_tensor<T>({n, cout, hout, wout});
  const std::int64_t k9 = cin * 9, hw = hout * wout;
  {
    std::vector<T> col(static_cast<std::size_t>(k9 * hw));
    for (std::int64_t img = 0; img < n; ++img) {
      detail::im2col3x3(x->data() + img * cin * h * wd, cin, h, wd, pad,
                        col.data());
      gemm(false, false, cout, hw, k9, T(1), w->data(), k9, col.data(), hw,
           T(0), y->data() + img * cout * hw, hw);
      T* yi = y->data() + img * cout * hw;
      for (std::int64_t k = 0; k < cout; ++k) {
        const T bk = b->data()[k];
        for (std::int64_t p = 0; p < hw; ++p) yi[k * hw + p] += bk;
      }
    }
  }

  const bool ng = x->needs_grad || w->needs_grad || b->needs_grad;
  tape.adopt(*y, ng);
  if (tape.recording() && ng) {
    tape.record(y, [x, w, b, y, pad, n, cin, h, wd, cout, hout, wout, k9,
                    hw]() {
      const T* gy = y->grad();
      if (b->needs_grad) {
        b->ensure_grad();
        T* gb = b->grad();
        for (std::int64_t img = 0; img < n; ++img)
          for (std::int64_t k = 0; k < cout; ++k) {
            const T* row = gy + (img * cout + k) * hw;
            T acc = 0;
            for (std::int64_t p = 0; p < hw; ++p) acc += row[p];
            gb[k] += acc;
          }
      }
      std::vector<T> col;
      if (w->needs_grad) {
        w->ensure_grad();
        col.resize(static_cast<std::size_t>(k9 * hw));
        for (std::int64_t img = 0; img < n; ++img) {
          detail::im2col3x3(x->data() + img * cin * h * wd, cin, h, wd, pad,
                            col.data());
          gemm(false, true, cout, k9, hw, T(1), gy + img * cout * hw, hw,
               col.data(), hw, T(1), w->grad(), k9);
        }
      }
      if (x->needs_grad) {
        x->ensure_grad();
        col.resize(static_cast<std::size_t>(k9 * hw));
        for (std::int64_t img = 0; img < n; ++img) {
          gemm(true, false, k9, hw, cout, T(1), w->data(), k9,
               gy + img * cout * hw, hw, T(0), col.data(), hw);
          detail::col2im3x3_add(col.data(), cin, h, wd, pad,
                                x->grad() + img * cin * h * wd);
        }
      }
    });
  }
  return y;
}

// Elementwise max(x, 0).
template <typename T>
TensorPtr<T> relu(Tape<T>& tape, const TensorPtr<T>& x) {
  auto y = make_tensor<T>(x->shape());
  const std::int64_t count = x->numel();
  for (std::int64_t i = 0; i < count; ++i)
    y->data()[i] = x->data()[i] > T(0) ? x->data()[i] : T(0);
  tape.adopt(*y, x->needs_grad);
  if (tape.recording() && x->needs_grad) {
    tape.record(y, [x, y, count]() {
      x->ensure_grad();
      const T* gy = y->grad();
      T* gx = x->grad();
      for (std::int64_t i = 0; i < count; ++i)
        if (x->data()[i] > T(0)) gx[i] += gy[i];
    });
  }
  return y;
}

// Elementwise hyperbolic tangent.
template <typename T>
TensorPtr<T> tanh(Tape<T>& tape, const TensorPtr<T>& x) {
  auto y = make_tensor<T>(x->shape());
  const std::int64_t count = x->numel();
  for (std::int64_t i = 0; i < count; ++i)
    y->data()[i] = std::tanh(x->data()[i]);
  tape.adopt(*y, x->needs_grad);
  if (tape.recording() && x->needs_grad) {
    tape.record(y, [x, y, count]() {
      x->ensure_grad();
      const T* gy = y->grad();
      T* gx = x->grad();
      for (std::int64_t i = 0; i < count; ++i) {
        const T t = y->data()[i];
        gx[i] += gy[i] * (T(1) - t * t);
      }
    });
  }
  return y;
}

// 2x2 max pooling with stride 2 on NCHW input. Height and width must be
// even. Gradients route to the first maximum in row-major window order.
template <typename T>
TensorPtr<T> maxpool2(Tape<T>& tape, const TensorPtr<T>& x) {
  detail::check_ndim("maxpool2", "input", x->ndim(), 4);
  const std::int64_t n = x->dim(0), c = x->dim(1), h = x->dim(2),
                     w = x->dim(3);
  if (h % 2 != 0 || w % 2 != 0)
    throw PreconditionError("maxpool2: spatial dims must be even, got " +
                            shape_str(x->shape()));
  const std::int64_t ho = h / 2, wo = w / 2;
  auto y = make_tensor<T>({n, c, ho, wo});
  auto argmax = std::make_shared<std::vector<std::uint8_t>>(
      static_cast<std::size_t>(y->numel()));
  const std::int64_t planes = n * c;
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    const T* xi = x->data() + pl * h * w;
    T* yi = y->data() + pl * ho * wo;
    std::uint8_t* am = argmax->data() + pl * ho * wo;
    for (std::int64_t i = 0; i < ho; ++i)
      for (std::int64_t j = 0; j < wo; ++j) {
        T best = xi[(2 * i) * w + 2 * j];
        std::uint8_t code = 0;
        for (std::uint8_t uv = 1; uv < 4; ++uv) {
          const T v = xi[(2 * i + uv / 2) * w + 2 * j + uv % 2];
          if (v > best) {
            best = v;
            code = uv;
          }
        }
        yi[i * wo + j] = best;
        am[i * wo + j] = code;
      }
  }
  tape.adopt(*y, x->needs_grad);
  if (tape.recording() && x->needs_grad) {
    tape.record(y, [x, y, argmax, planes, h, w, ho, wo]() {
      x->ensure_grad();
      const T* gy = y->grad();
      for (std::int64_t pl = 0; pl < planes; ++pl) {
        T* gx = x->grad() + pl * h * w;
        const std::uint8_t* am = argmax->data() + pl * ho * wo;
        const T* g = gy + pl * ho * wo;
        for (std::int64_t i = 0; i < ho; ++i)
          for (std::int64_t j = 0; j < wo; ++j) {
            const std::uint8_t code = am[i * wo + j];
            gx[(2 * i + code / 2) * w + 2 * j + code % 2] += g[i * wo + j];
          }
      }
    });
  }
  return y;
}

// Affine layer: y = x @ w + b with x [N, D], w [D, M], b [M].
template <typename T>
TensorPtr<T> linear(Tape<T>& tape, const TensorPtr<T>& x,
                    const TensorPtr<T>& w, const TensorPtr<T>& b) {
  detail::check_ndim("linear", "input", x->ndim(), 2);
  detail::check_ndim("linear", "weight", w->ndim(), 2);
  detail::check_ndim("linear", "bias", b->ndim(), 1);
  const std::int64_t n = x->dim(0), d = x->dim(1), m = w->dim(1);
  if (w->dim(0) != d)
    throw PreconditionError("linear: weight expects " + std::to_string(w->dim(0)) +
                            " input features, got " + std::to_string(d));
  if (b->dim(0) != m)
    throw PreconditionError("linear: bias size " + std::to_string(b->dim(0)) +
                            " does not match " + std::to_string(m) + " outputs");
  auto y = make_tensor<T>({n, m});
  gemm(false, false, n, m, d, T(1), x->data(), d, w->data(), m, T(0), y->data(),
       m);
  for (std::int64_t i = 0; i < n; ++i) {
    T* row = y->data() + i * m;
    for (std::int64_t j = 0; j < m; ++j) row[j] += b->data()[j];
  }
  const bool ng = x->needs_grad || w->needs_grad || b->needs_grad;
  tape.adopt(*y, ng);
  if (tape.recording() && ng) {
    tape.record(y, [x, w, b, y, n, d, m]() {
      const T* gy = y->grad();
      if (b->needs_grad) {
        b->ensure_grad();
        T* gb = b->grad();
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t j = 0; j < m; ++j) gb[j] += gy[i * m + j];
      }
      if (w->needs_grad) {
        w->ensure_grad();
        gemm(true, false, d, m, n, T(1), x->data(), d, gy, m, T(1), w->grad(),
             m);
      }
      if (x->needs_grad) {
        x->ensure_grad();
        gemm(false, true, n, d, m, T(1), gy, m, w->data(), m, T(1), x->grad(),
             d);
      }
    });
  }
  return y;
}

// Inverted dropout. While training, each element is dropped with
// probability p and survivors are scaled by 1/(1-p), so the expected
// activation is unchanged and inference needs no rescaling. The mask is a
// pure function of (seed, element index) and is recomputed in backward.
// With training=false (or p=0) the input passes through untouched.
template <typename T>
TensorPtr<T> dropout(Tape<T>& tape, const TensorPtr<T>& x, double p,
                     bool training, std::uint64_t seed) {
  if (p < 0.0 || p >= 1.0)
    throw PreconditionError("dropout: probability must be in [0, 1), got " +
                            std::to_string(p));
  if (!training || p == 0.0) return x;
  auto y = make_tensor<T>(x->shape());
  const std::int64_t count = x->numel();
  const T scale = T(1.0 / (1.0 - p));
  for (std::int64_t i = 0; i < count; ++i)
    y->data()[i] = detail::element_unit(seed, static_cast<std::uint64_t>(i)) >= p
                       ? x->data()[i] * scale
                       : T(0);
  tape.adopt(*y, x->needs_grad);
  if (tape.recording() && x->needs_grad) {
    tape.record(y, [x, y, p, seed, count, scale]() {
      x->ensure_grad();
      const T* gy = y->grad();
      T* gx = x->grad();
      for (std::int64_t i = 0; i < count; ++i)
        if (detail::element_unit(seed, static_cast<std::uint64_t>(i)) >= p)
          gx[i] += gy[i] * scale;
    });
  }
  return y;
}

// Copies data into a new shape with the same element count. One dim may
// be -1 and is inferred.
template <typename T>
TensorPtr<T> reshape(Tape<T>& tape, const TensorPtr<T>& x, Shape shape) {
  std::int64_t known = 1, infer = -1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      if (infer >= 0)
        throw PreconditionError("reshape: at most one dim may be -1");
      infer = static_cast<std::int64_t>(i);
    } else if (shape[i] <= 0) {
      throw PreconditionError("reshape: invalid target shape " +
                              shape_str(shape));
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0) {
    if (known == 0 || x->numel() % known != 0)
      throw PreconditionError("reshape: cannot infer dim for " +
                              std::to_string(x->numel()) + " elements in " +
                              shape_str(shape));
    shape[static_cast<std::size_t>(infer)] = x->numel() / known;
  } else if (known != x->numel()) {
    throw PreconditionError("reshape: " + shape_str(x->shape()) + " has " +
                            std::to_string(x->numel()) + " elements, target " +
                            shape_str(shape) + " has " + std::to_string(known));
  }
  auto y = make_tensor<T>(std::move(shape), x->values());
  tape.adopt(*y, x->needs_grad);
  if (tape.recording() && x->needs_grad) {
    const std::int64_t count = x->numel();
    tape.record(y, [x, y, count]() {
      x->ensure_grad();
      const T* gy = y->grad();
      T* gx = x->grad();
      for (std::int64_t i = 0; i < count; ++i) gx[i] += gy[i];
    });
  }
  return y;
}

// Collapses NCHW (or any >= 2-dim tensor) to [N, rest].
template <typename T>
TensorPtr<T> flatten(Tape<T>& tape, const TensorPtr<T>& x) {
  if (x->ndim() < 2)
    throw PreconditionError("flatten: input must have at least 2 dims, got " +
                            shape_str(x->shape()));
  return reshape(tape, x, {x->dim(0), -1});
}

// Sum of all elements, as a 1-element tensor.
template <typename T>
TensorPtr<T> sum(Tape<T>& tape, const TensorPtr<T>& x) {
  auto y = make_tensor<T>(Shape{1});
  T acc = 0;
  const std::int64_t count = x->numel();
  for (std::int64_t i = 0; i < count; ++i) acc += x->data()[i];
  y->data()[0] = acc;
  tape.adopt(*y, x->needs_grad);
  if (tape.recording() && x->needs_grad) {
    tape.record(y, [x, y, count]() {
      x->ensure_grad();
      const T g = y->grad()[0];
      T* gx = x->grad();
      for (std::int64_t i = 0; i < count; ++i) gx[i] += g;
    });
  }
  return y;
}

// Fixed-coefficient inner product: y = sum_i coeffs[i] * x[i]. The
// coefficients are plain numbers, not differentiated. Useful for probing
// every output element of an op with distinct weights.
template <typename T>
TensorPtr<T> weighted_sum(Tape<T>& tape, const TensorPtr<T>& x,
                          std::vector<T> coeffs) {
  if (static_cast<std::int64_t>(coeffs.size()) != x->numel())
    throw PreconditionError("weighted_sum: " + std::to_string(coeffs.size()) +
                            " coefficients for " + std::to_string(x->numel()) +
                            " elements");
  auto y = make_tensor<T>(Shape{1});
  T acc = 0;
  const std::int64_t count = x->numel();
  for (std::int64_t i = 0; i < count; ++i) acc += coeffs[i] * x->data()[i];
  y->data()[0] = acc;
  tape.adopt(*y, x->needs_grad);
  if (tape.recording() && x->needs_grad) {
    auto cs = std::make_shared<std::vector<T>>(std::move(coeffs));
    tape.record(y, [x, y, cs, count]() {
      x->ensure_grad();
      const T g = y->grad()[0];
      T* gx = x->grad();
      for (std::int64_t i = 0; i < count; ++i) gx[i] += g * (*cs)[i];
    });
  }
  return y;
}

template <typename T>
struct SoftmaxLossResult {
  TensorPtr<T> loss;   // 1-element tensor: mean cross-entropy over the batch
  TensorPtr<T> probs;  // [N, C] softmax probabilities (not differentiated)
};

// Numerically stable softmax + mean cross-entropy in one op. Probabilities
// come from the shifted log-sum-exp form, and the backward rule is the
// closed form (softmax - onehot) / N, which avoids ever materialising a
// log() whose gradient could blow up at tiny probabilities.
template <typename T>
SoftmaxLossResult<T> softmax_cross_entropy(Tape<T>& tape,
                                           const TensorPtr<T>& logits,
                                           const std::vector<std::int64_t>& targets) {
  detail::check_ndim("softmax_cross_entropy", "logits", logits->ndim(), 2);
  const std::int64_t n = logits->dim(0), c = logits->dim(1);
  if (static_cast<std::int64_t>(targets.size()) != n)
    throw PreconditionError("softmax_cross_entropy: " +
                            std::to_string(targets.size()) + " targets for " +
                            std::to_string(n) + " rows");
  for (std::int64_t i = 0; i < n; ++i)
    if (targets[i] < 0 || targets[i] >= c)
      throw PreconditionError("softmax_cross_entropy: target " +
                              std::to_string(targets[i]) + " out of range [0, " +
                              std::to_string(c) + ")");
  auto probs = make_tensor<T>({n, c});
  auto loss = make_tensor<T>(Shape{1});
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const T* row = logits->data() + i * c;
    T mx = row[0];
    for (std::int64_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double lse = 0.0;
    for (std::int64_t j = 0; j < c; ++j)
      lse += std::exp(static_cast<double>(row[j] - mx));
    lse = std::log(lse);
    T* prow = probs->data() + i * c;
    for (std::int64_t j = 0; j < c; ++j)
      prow[j] = static_cast<T>(
          std::exp(static_cast<double>(row[j] - mx) - lse));
    total += lse - static_cast<double>(row[targets[i]] - mx);
  }
  loss->data()[0] = static_cast<T>(total / static_cast<double>(n));
  tape.adopt(*loss, logits->needs_grad);
  if (tape.recording() && logits->needs_grad) {
    auto tgt = std::make_shared<std::vector<std::int64_t>>(targets);
    tape.record(loss, [logits, probs, loss, tgt, n, c]() {
      logits->ensure_grad();
      const T g = loss->grad()[0];
      const T inv_n = T(1) / static_cast<T>(n);
      T* gx = logits->grad();
      for (std::int64_t i = 0; i < n; ++i) {
        const T* prow = probs->data() + i * c;
        T* grow = gx + i * c;
        for (std::int64_t j = 0; j < c; ++j)
          grow[j] += g * inv_n * prow[j];
        grow[(*tgt)[i]] -= g * inv_n;
      }
    });
  }
  return {loss, probs};
}

}  // namespace adinkra::core
