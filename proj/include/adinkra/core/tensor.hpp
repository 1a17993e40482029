#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "adinkra/core/error.hpp"

namespace adinkra::core {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Dense row-major n-d array with an optional gradient buffer of the same
// shape. The autodiff fields (producer tape, needs_grad) are populated by
// the ops in tape.hpp; a plain tensor is a leaf.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(check_numel(shape_), fill) {}

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size()))
      throw PreconditionError("tensor data length " +
                              std::to_string(data_.size()) +
                              " does not match shape " + shape_str(shape_));
  }

  const Shape& shape() const { return shape_; }
  std::int64_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t ndim() const { return shape_.size(); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const {
    return data_[static_cast<std::size_t>(i)];
  }

  bool has_grad() const { return !grad_.empty(); }

  // Allocates a zero gradient buffer if absent.
  std::vector<T>& ensure_grad() {
    if (grad_.empty()) grad_.assign(data_.size(), T(0));
    return grad_;
  }

  T* grad() { return grad_.data(); }
  const T* grad() const { return grad_.data(); }
  std::vector<T>& grad_values() { return grad_; }
  const std::vector<T>& grad_values() const { return grad_; }

  void zero_grad() {
    if (!grad_.empty()) std::fill(grad_.begin(), grad_.end(), T(0));
  }

  void drop_grad() {
    grad_.clear();
    grad_.shrink_to_fit();
  }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  // Autodiff bookkeeping (see Tape).
  const void* producer_tape = nullptr;
  bool needs_grad = false;

 private:
  static std::int64_t check_numel(const Shape& shape) {
    for (auto d : shape)
      if (d <= 0)
        throw PreconditionError("non-positive tensor extent in " +
                                shape_str(shape));
    return shape_numel(shape);
  }

  Shape shape_;
  std::vector<T> data_;
  std::vector<T> grad_;
};

template <typename T>
using TensorPtr = std::shared_ptr<Tensor<T>>;

template <typename T>
TensorPtr<T> make_tensor(Shape shape, T fill = T(0)) {
  return std::make_shared<Tensor<T>>(std::move(shape), fill);
}

template <typename T>
TensorPtr<T> make_tensor(Shape shape, std::vector<T> data) {
  return std::make_shared<Tensor<T>>(std::move(shape), std::move(data));
}

}  // namespace adinkra::core
