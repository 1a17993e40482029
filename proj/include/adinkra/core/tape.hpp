#pragma once

#include <functional>
#include <vector>

#include "adinkra/core/tensor.hpp"

namespace adinkra::core {

// Reverse-mode recorder. Ops append one node per call, holding the output
// and a closure with the inputs and saved intermediates for the backward
// rule. Nodes are appended in execution order, so the list is already
// topological and backward() just walks it in reverse.
//
// Gradients accumulate: calling backward() twice without zeroing doubles
// every gradient. reset() (or backward(..., release=true)) drops the
// recorded graph and frees the captured tensors.
template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  void record(TensorPtr<T> output, std::function<void()> backward_fn) {
    nodes_.push_back(Node{std::move(output), std::move(backward_fn)});
  }

  // Marks an op output as produced here and propagates grad demand.
  void adopt(Tensor<T>& out, bool needs_grad) {
    out.producer_tape = this;
    out.needs_grad = recording_ && needs_grad;
  }

  void backward(const TensorPtr<T>& loss, bool release = false) {
    if (loss->numel() != 1)
      throw PreconditionError("backward requires a scalar loss, got shape " +
                              shape_str(loss->shape()));
    if (loss->producer_tape != this)
      throw UsageError("loss tensor was not produced under this tape");
    loss->ensure_grad();
    loss->grad()[0] += T(1);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& node = nodes_[i];
      if (node.output->has_grad()) node.backward_fn();
      // An intermediate's grad is scratch for this pass only — its node has
      // just consumed it. Dropping it here keeps peak memory low and makes
      // repeated backwards accumulate exactly once per pass into the
      // leaves, which are never node outputs and so are never dropped.
      node.output->drop_grad();
      if (release) node = Node{};
    }
    if (release) reset();
  }

  void reset() {
    nodes_.clear();
    nodes_.shrink_to_fit();
  }

 private:
  struct Node {
    TensorPtr<T> output;
    std::function<void()> backward_fn;
  };

  std::vector<Node> nodes_;
  bool recording_ = true;
};

}  // namespace adinkra::core
