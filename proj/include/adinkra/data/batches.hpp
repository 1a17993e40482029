#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "adinkra/core/rng.hpp"
#include "adinkra/core/tensor.hpp"
#include "adinkra/data/dataset.hpp"
#include "adinkra/data/preprocess.hpp"

namespace adinkra::data {

template <typename T>
struct Batch {
  adinkra::core::TensorPtr<T> images;  // [N, 3, S, S]
  std::vector<std::int64_t> labels;
  std::vector<std::int64_t> sample_indices;  // dataset indices, batch order
};

// Streams one epoch of a split in ceil(n/batch) batches. Each sample
// appears exactly once; the last batch may be short. Preprocessing fans
// out over `workers` threads, but every sample writes its own slot of the
// preallocated batch tensor, so batch contents are identical for any
// worker count and follow the (optionally shuffled) order exactly.
template <typename T>
class BatchStream {
 public:
  BatchStream(const Dataset& ds, Split split, std::int64_t batch, bool shuffle,
              std::uint64_t seed, std::int64_t workers, std::int64_t size)
      : ds_(ds), batch_(batch), workers_(workers), size_(size) {
    if (batch < 1) throw PreconditionError("batch size must be >= 1");
    if (workers < 1) throw PreconditionError("worker count must be >= 1");
    order_ = ds.indices_of(split);
    if (shuffle) {
      adinkra::core::Rng rng(seed);
      rng.shuffle(order_);
    }
  }

  std::int64_t total_samples() const {
    return static_cast<std::int64_t>(order_.size());
  }

  std::int64_t num_batches() const {
    return (total_samples() + batch_ - 1) / batch_;
  }

  // Fills `out` with the next batch; false at end of epoch.
  bool next(Batch<T>& out) {
    const std::int64_t n = total_samples();
    if (cursor_ >= n) return false;
    const std::int64_t count = std::min(batch_, n - cursor_);
    out.images = adinkra::core::make_tensor<T>({count, 3, size_, size_});
    out.labels.resize(static_cast<std::size_t>(count));
    out.sample_indices.resize(static_cast<std::size_t>(count));
    const std::int64_t plane = 3 * size_ * size_;

    auto work = [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t i = begin; i < end; ++i) {
        const std::int64_t idx = order_[static_cast<std::size_t>(cursor_ + i)];
        const LabeledImage& img = ds_.images[static_cast<std::size_t>(idx)];
        preprocess_into(img, size_, out.images->data() + i * plane);
        out.labels[static_cast<std::size_t>(i)] = img.label;
        out.sample_indices[static_cast<std::size_t>(i)] = idx;
      }
    };

    const std::int64_t nw = std::min(workers_, count);
    if (nw <= 1) {
      work(0, count);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nw));
      const std::int64_t chunk = (count + nw - 1) / nw;
      for (std::int64_t w = 0; w < nw; ++w)
        pool.emplace_back([&, w]() {
          try {
            work(w * chunk, std::min(count, (w + 1) * chunk));
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      for (auto& t : pool) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    cursor_ += count;
    return true;
  }

 private:
  const Dataset& ds_;
  std::vector<std::int64_t> order_;
  std::int64_t batch_;
  std::int64_t workers_;
  std::int64_t size_;
  std::int64_t cursor_ = 0;
};

}  // namespace adinkra::data
