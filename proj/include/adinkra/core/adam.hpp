#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "adinkra/core/tensor.hpp"

namespace adinkra::core {

// A trainable tensor plus its Adam moment estimates. The value tensor is
// shared with the graph (ops see the same storage across steps) and is
// marked as requiring gradients on construction.
template <typename T>
struct ParamTensor {
  std::string name;
  TensorPtr<T> value;
  std::vector<T> adam_m;  // first-moment running average
  std::vector<T> adam_v;  // second-moment running average
  std::int64_t step_count = 0;

  ParamTensor(std::string param_name, TensorPtr<T> param_value)
      : name(std::move(param_name)),
        value(std::move(param_value)),
        adam_m(static_cast<std::size_t>(value->numel()), T(0)),
        adam_v(static_cast<std::size_t>(value->numel()), T(0)) {
    value->needs_grad = true;
  }
};

// One bias-corrected Adam update over a parameter group. Every parameter
// must already hold a gradient. Gradients are left untouched; the caller
// zeroes them when it wants a fresh accumulation.
template <typename T>
void adam_step(std::vector<ParamTensor<T>*>& params, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  for (ParamTensor<T>* p : params) {
    if (!p->value->has_grad())
      throw UsageError("adam_step: parameter '" + p->name +
                       "' has no gradient; run backward first");
    p->step_count += 1;
    const double t = static_cast<double>(p->step_count);
    const double bias1 = 1.0 - std::pow(beta1, t);
    const double bias2 = 1.0 - std::pow(beta2, t);
    const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
    const T one_m_b1 = static_cast<T>(1.0 - beta1);
    const T one_m_b2 = static_cast<T>(1.0 - beta2);
    const T step_scale = static_cast<T>(lr / bias1);
    const T v_scale = static_cast<T>(1.0 / bias2);
    const T epsilon = static_cast<T>(eps);
    T* value = p->value->data();
    const T* grad = p->value->grad();
    const std::int64_t count = p->value->numel();
    for (std::int64_t i = 0; i < count; ++i) {
      const T g = grad[i];
      p->adam_m[i] = b1 * p->adam_m[i] + one_m_b1 * g;
      p->adam_v[i] = b2 * p->adam_v[i] + one_m_b2 * g * g;
      value[i] -= step_scale * p->adam_m[i] /
                  (std::sqrt(p->adam_v[i] * v_scale) + epsilon);
    }
  }
}

}  // namespace adinkra::core
