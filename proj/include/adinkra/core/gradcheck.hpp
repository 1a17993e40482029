#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "adinkra/core/tape.hpp"
#include "adinkra/core/tensor.hpp"

namespace adinkra::core {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  std::int64_t worst_index = -1;
  bool flagged = false;  // true when max_rel_err exceeded the tolerance
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  double max_rel_err = 0.0;

  bool ok() const {
    for (const auto& e : entries)
      if (e.flagged) return false;
    return true;
  }
};

// Checks analytic gradients against central finite differences
// (f(x+h) - f(x-h)) / 2h with h = 1e-5, reporting the per-input maximum of
//   |analytic - numeric| / max(1, |analytic|, |numeric|).
// The forward function is evaluated 2*numel extra times, so inputs are
// required to stay small (<= 1000 elements total), and the arithmetic
// must be 64-bit: 32-bit differences are noise at these tolerances.
template <typename T>
GradCheckReport grad_check(
    const std::function<TensorPtr<T>(Tape<T>&, const std::vector<TensorPtr<T>>&)>& forward_fn,
    const std::vector<TensorPtr<T>>& inputs, double tolerance,
    double h = 1e-5) {
  if (sizeof(T) < sizeof(double))
    throw PreconditionError(
        "grad_check requires the 64-bit verification scalar type");
  std::int64_t total = 0;
  for (const auto& t : inputs) total += t->numel();
  if (total > 1000)
    throw PreconditionError("grad_check: inputs hold " + std::to_string(total) +
                            " elements, limit is 1000");

  for (const auto& t : inputs) {
    t->needs_grad = true;
    t->drop_grad();
  }
  Tape<T> tape;
  TensorPtr<T> out = forward_fn(tape, inputs);
  if (out->numel() != 1)
    throw PreconditionError("grad_check: forward output must be scalar, got " +
                            shape_str(out->shape()));
  tape.backward(out);

  std::vector<std::vector<T>> analytic;
  analytic.reserve(inputs.size());
  for (const auto& t : inputs)
    analytic.push_back(t->has_grad() ? t->grad_values()
                                     : std::vector<T>(t->numel(), T(0)));

  auto eval = [&forward_fn, &inputs]() -> double {
    Tape<T> silent(false);
    TensorPtr<T> y = forward_fn(silent, inputs);
    return static_cast<double>(y->data()[0]);
  };

  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t idx = 0; idx < inputs.size(); ++idx) {
    Tensor<T>& t = *inputs[idx];
    GradCheckEntry entry;
    entry.name = "input" + std::to_string(idx);
    for (std::int64_t e = 0; e < t.numel(); ++e) {
      const T saved = t.data()[e];
      t.data()[e] = saved + static_cast<T>(h);
      const double up = eval();
      t.data()[e] = saved - static_cast<T>(h);
      const double down = eval();
      t.data()[e] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double exact = static_cast<double>(analytic[idx][e]);
      const double rel = std::abs(exact - numeric) /
                         std::max({1.0, std::abs(exact), std::abs(numeric)});
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_index = e;
      }
    }
    entry.flagged = entry.max_rel_err > tolerance;
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace adinkra::core
