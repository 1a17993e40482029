#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adinkra/cnn/model.hpp"
#include "adinkra/core/sysinfo.hpp"
#include "adinkra/data/batches.hpp"
#include "adinkra/data/dataset.hpp"
#include "adinkra/data/preprocess.hpp"

namespace adinkra::cnn {

using adinkra::data::Dataset;
using adinkra::data::LabelCatalog;
using adinkra::data::Split;

struct TrainConfig {
  std::int64_t epochs = 50;
  double lr = 1e-4;
  std::int64_t batch_train = 32;
  std::int64_t batch_pred = 4;
  std::int64_t workers = 4;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 0;    // epochs between checkpoints; 0 = off
  std::string checkpoint_dir;           // required when checkpoint_every > 0
  std::int64_t early_stop_patience = 0;  // epochs without val improvement; 0 = off
};

struct EpochRecord {
  std::int64_t epoch = 0;  // 1-based
  double train_loss = 0;
  double train_acc = 0;
  double val_loss = 0;
  double val_acc = 0;
  double seconds = 0;
  std::int64_t peak_mem_bytes = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::int64_t best_epoch = -1;  // 1-based epoch of the selected parameters
  double best_val_acc = 0;
};

struct EvalResult {
  double accuracy = 0;
  std::vector<std::int64_t> confusion;  // C x C, row = true, col = predicted
  double mean_loss = 0;
  std::int64_t num_classes = 0;
};

struct Prediction {
  std::int64_t index = -1;
  std::string twi;
  std::string english;
  double confidence = 0;
};

// Defined in the checkpoint unit; declared here so periodic checkpointing
// inside train() needs no circular include.
template <typename T>
void save_checkpoint(const ModelState<T>& model, const TrainHistory& history,
                     const std::string& path);

namespace detail {

// Row-major argmax per sample; ties resolve to the lower class index.
template <typename T>
std::int64_t argmax_row(const T* row, std::int64_t n) {
  std::int64_t best = 0;
  for (std::int64_t i = 1; i < n; ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

}  // namespace detail

// Mean loss, accuracy and confusion counts of the model over one split.
template <typename T>
EvalResult evaluate(ModelState<T>& model, const Dataset& ds, Split split,
                    std::int64_t batch, std::int64_t workers = 1) {
  const std::int64_t c = model.spec.num_classes;
  EvalResult result;
  result.num_classes = c;
  result.confusion.assign(static_cast<std::size_t>(c * c), 0);
  data::BatchStream<T> stream(ds, split, batch, /*shuffle=*/false, 0, workers,
                              model.spec.input_size);
  if (stream.total_samples() == 0)
    throw UsageError(std::string("evaluate: split '") +
                     data::split_name(split) + "' is empty");
  double loss_sum = 0;
  std::int64_t correct = 0, total = 0;
  data::Batch<T> b;
  while (stream.next(b)) {
    Tape<T> tape(/*recording=*/false);
    auto logits = forward(tape, model, b.images, /*training=*/false);
    auto loss = core::softmax_cross_entropy(tape, logits, b.labels);
    const std::int64_t n = b.images->dim(0);
    loss_sum += static_cast<double>(loss.loss->data()[0]) *
                static_cast<double>(n);
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t pred =
          detail::argmax_row(loss.probs->data() + i * c, c);
      const std::int64_t truth = b.labels[static_cast<std::size_t>(i)];
      result.confusion[static_cast<std::size_t>(truth * c + pred)] += 1;
      correct += pred == truth ? 1 : 0;
      total += 1;
    }
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  result.mean_loss = loss_sum / static_cast<double>(total);
  return result;
}

// Shuffled mini-batch Adam training with best-validation-accuracy model
// selection: after the final epoch the parameters are restored to the
// epoch with the highest validation accuracy (earliest wins ties).
// Per-epoch shuffles and per-batch dropout masks derive from the base
// seed, so a run is a pure function of (model, data, config) at worker
// count 1.
template <typename T>
TrainHistory train(
    ModelState<T>& model, const Dataset& ds, const TrainConfig& cfg,
    const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  if (cfg.epochs < 1) throw UsageError("train: epochs must be >= 1");
  if (cfg.lr < 0) throw PreconditionError("train: learning rate must be >= 0");
  if (cfg.batch_train < 1 || cfg.batch_pred < 1)
    throw PreconditionError("train: batch sizes must be >= 1");
  if (cfg.workers < 1) throw PreconditionError("train: workers must be >= 1");
  if (cfg.checkpoint_every < 0)
    throw PreconditionError("train: checkpoint_every must be >= 0");
  if (ds.indices_of(Split::train).empty())
    throw UsageError("train: training split is empty");
  if (ds.indices_of(Split::val).empty())
    throw UsageError("train: validation split is empty");

  const std::int64_t c = model.spec.num_classes;
  for (const auto& img : ds.images)
    if (img.label < 0 || img.label >= c)
      throw PreconditionError("train: label " + std::to_string(img.label) +
                              " outside [0, " + std::to_string(c) + ")");

  TrainHistory history;
  std::vector<std::vector<T>> best_values;
  auto params = model.param_ptrs();

  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    data::BatchStream<T> stream(
        ds, Split::train, cfg.batch_train, /*shuffle=*/true,
        core::hash_combine(cfg.seed, static_cast<std::uint64_t>(epoch)),
        cfg.workers, model.spec.input_size);
    double loss_sum = 0;
    std::int64_t correct = 0, total = 0, batch_index = 0;
    data::Batch<T> b;
    while (stream.next(b)) {
      Tape<T> tape;
      const std::uint64_t dropout_seed = core::hash_combine(
          cfg.seed, static_cast<std::uint64_t>(epoch),
          static_cast<std::uint64_t>(batch_index));
      auto logits = forward(tape, model, b.images, /*training=*/true,
                            dropout_seed);
      auto loss = core::softmax_cross_entropy(tape, logits, b.labels);
      const double loss_value = static_cast<double>(loss.loss->data()[0]);
      if (!std::isfinite(loss_value))
        throw Error("training aborted: non-finite loss at epoch " +
                    std::to_string(epoch + 1) + ", batch " +
                    std::to_string(batch_index));
      const std::int64_t n = b.images->dim(0);
      loss_sum += loss_value * static_cast<double>(n);
      for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t pred =
            detail::argmax_row(loss.probs->data() + i * c, c);
        correct += pred == b.labels[static_cast<std::size_t>(i)] ? 1 : 0;
        total += 1;
      }
      tape.backward(loss.loss, /*release=*/true);
      core::adam_step(params, cfg.lr);
      for (auto* p : params) p->value->drop_grad();
      batch_index += 1;
    }

    EpochRecord record;
    record.epoch = epoch + 1;
    record.train_loss = loss_sum / static_cast<double>(total);
    record.train_acc =
        static_cast<double>(correct) / static_cast<double>(total);
    EvalResult val =
        evaluate(model, ds, Split::val, cfg.batch_pred, cfg.workers);
    record.val_loss = val.mean_loss;
    record.val_acc = val.accuracy;
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    record.peak_mem_bytes = core::peak_rss_bytes();
    history.epochs.push_back(record);

    if (history.best_epoch < 0 || record.val_acc > history.best_val_acc) {
      history.best_epoch = record.epoch;
      history.best_val_acc = record.val_acc;
      best_values.clear();
      for (auto* p : params) best_values.push_back(p->value->values());
    }
    if (on_epoch) on_epoch(record);

    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() &&
        (epoch + 1) % cfg.checkpoint_every == 0) {
      save_checkpoint(model, history,
                      cfg.checkpoint_dir + "/epoch_" +
                          std::to_string(epoch + 1) + ".adnk");
    }
    if (cfg.early_stop_patience > 0 &&
        record.epoch - history.best_epoch >= cfg.early_stop_patience)
      break;
  }

  if (!best_values.empty())
    for (std::size_t i = 0; i < params.size(); ++i)
      params[i]->value->values() = best_values[i];
  return history;
}

// Single-image classification: argmax of softmax(logits) with its
// probability. Ties pick the lower class index.
template <typename T>
Prediction predict(ModelState<T>& model, const LabelCatalog& catalog,
                   const data::LabeledImage& image) {
  if (catalog.size() != model.spec.num_classes)
    throw ConfigError("predict: catalog has " + std::to_string(catalog.size()) +
                      " classes but the model expects " +
                      std::to_string(model.spec.num_classes));
  auto x = core::make_tensor<T>(
      {1, 3, model.spec.input_size, model.spec.input_size});
  data::preprocess_into(image, model.spec.input_size, x->data());
  Tape<T> tape(/*recording=*/false);
  auto logits = forward(tape, model, x, /*training=*/false);
  const std::int64_t c = model.spec.num_classes;
  // softmax in double with the usual max-shift for stability
  double max_logit = -1e300;
  for (std::int64_t i = 0; i < c; ++i)
    max_logit = std::max(max_logit, static_cast<double>(logits->data()[i]));
  double denom = 0;
  for (std::int64_t i = 0; i < c; ++i)
    denom += std::exp(static_cast<double>(logits->data()[i]) - max_logit);
  const std::int64_t best = detail::argmax_row(logits->data(), c);
  Prediction out;
  out.index = best;
  out.twi = catalog.at(best).twi;
  out.english = catalog.at(best).english;
  out.confidence =
      std::exp(static_cast<double>(logits->data()[best]) - max_logit) / denom;
  return out;
}

// Convenience overload decoding an image file first; undecodable files
// surface the decoder's input error.
template <typename T>
Prediction predict(ModelState<T>& model, const LabelCatalog& catalog,
                   const std::string& image_path) {
  data::RawImage raw = data::decode_image(image_path);
  data::LabeledImage img;
  img.height = raw.height;
  img.width = raw.width;
  img.channels = raw.channels;
  img.pixels = std::move(raw.pixels);
  img.source_path = image_path;
  return predict(model, catalog, img);
}

}  // namespace adinkra::cnn
