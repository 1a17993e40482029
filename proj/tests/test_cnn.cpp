#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "adinkra/cnn/checkpoint.hpp"
#include "adinkra/cnn/model.hpp"
#include "adinkra/cnn/train.hpp"
#include "adinkra/core/rng.hpp"
#include "adinkra/data/synth.hpp"

using namespace adinkra;
using namespace adinkra::cnn;
namespace fs = std::filesystem;

namespace {

// Small architecture for fast functional tests: full six-conv layout at
// toy widths. Input 16 -> pooled to 2, flatten 8*4 = 32.
ModelSpec tiny_spec(std::int64_t num_classes = 5) {
  ModelSpec spec;
  spec.input_size = 16;
  spec.conv_channels = {8, 8, 8, 8, 8, 8};
  spec.fc_widths = {32, 16, num_classes};
  spec.num_classes = num_classes;
  spec.dropout_p = 0.25;
  return spec;
}

template <typename T>
core::TensorPtr<T> random_images(std::int64_t n, std::int64_t size,
                                 std::uint64_t seed) {
  auto x = core::make_tensor<T>({n, 3, size, size});
  core::Rng rng(seed);
  for (auto& v : x->values()) v = static_cast<T>(rng.uniform());
  return x;
}

data::Dataset tiny_synth(std::int64_t classes, std::int64_t per_class,
                         std::uint64_t seed) {
  data::Dataset ds = data::synth_generate(classes, per_class, 16, seed);
  data::split(ds, 0.60, 0.20, 0.20, seed);
  return ds;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("adinkra_cnn_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

// ---------------------------------------------------------------------------
// spec validation and the shape trace
// ---------------------------------------------------------------------------

TEST_CASE("spec: defaults validate; violations are configuration errors") {
  CHECK_NOTHROW(validate_spec(ModelSpec{}));
  CHECK_NOTHROW(validate_spec(reduced_spec()));
  CHECK_NOTHROW(validate_spec(tiny_spec()));

  ModelSpec bad = ModelSpec{};
  bad.input_size = 100;  // not divisible by 2^3
  CHECK_THROWS_AS(validate_spec(bad), ConfigError);

  bad = ModelSpec{};
  bad.fc_widths = {4096, 4096, 61};
  CHECK_THROWS_AS(validate_spec(bad), ConfigError);

  bad = ModelSpec{};
  bad.dropout_p = 1.0;
  CHECK_THROWS_AS(validate_spec(bad), ConfigError);

  bad = ModelSpec{};
  bad.pool_after = {2, 4, 7};
  CHECK_THROWS_AS(validate_spec(bad), ConfigError);
}

TEST_CASE("shape trace: full-scale architecture, no allocation") {
  const auto trace = shape_trace(ModelSpec{});
  // spatial sizes after each conv and pool
  auto entry = [&](const std::string& name) -> const ShapeTraceEntry& {
    for (const auto& e : trace)
      if (e.name == name) return e;
    REQUIRE_MESSAGE(false, "missing trace entry " << name);
    return trace.front();
  };
  CHECK(entry("input").shape == std::vector<std::int64_t>({3, 128, 128}));
  CHECK(entry("conv1").shape == std::vector<std::int64_t>({64, 128, 128}));
  CHECK(entry("conv2").shape == std::vector<std::int64_t>({128, 128, 128}));
  CHECK(entry("pool1").shape == std::vector<std::int64_t>({128, 64, 64}));
  CHECK(entry("conv3").shape == std::vector<std::int64_t>({256, 64, 64}));
  CHECK(entry("conv4").shape == std::vector<std::int64_t>({256, 64, 64}));
  CHECK(entry("pool2").shape == std::vector<std::int64_t>({256, 32, 32}));
  CHECK(entry("conv5").shape == std::vector<std::int64_t>({512, 32, 32}));
  CHECK(entry("conv6").shape == std::vector<std::int64_t>({512, 32, 32}));
  CHECK(entry("pool3").shape == std::vector<std::int64_t>({512, 16, 16}));
  CHECK(entry("flatten").shape == std::vector<std::int64_t>({131072}));
  CHECK(entry("fc1").shape == std::vector<std::int64_t>({4096}));
  CHECK(entry("fc1").weight_params == std::int64_t(536870912));
  CHECK(entry("fc1").bias_params == 4096);
  CHECK(entry("fc2").weight_params == 4096 * 4096);
  CHECK(entry("fc3").shape == std::vector<std::int64_t>({62}));
  CHECK(entry("fc3").weight_params == 4096 * 62);
  CHECK(flatten_width(ModelSpec{}) == 131072);
}

TEST_CASE("shape trace: reduced architecture") {
  const auto trace = shape_trace(reduced_spec());
  CHECK(flatten_width(reduced_spec()) == 32768);
  bool saw_flatten = false;
  for (const auto& e : trace) {
    if (e.name == "flatten") {
      saw_flatten = true;
      CHECK(e.shape == std::vector<std::int64_t>({32768}));
    }
    if (e.name == "fc1") CHECK(e.weight_params == std::int64_t(32768) * 512);
    if (e.name == "pool3") CHECK(e.shape == std::vector<std::int64_t>({512, 8, 8}));
  }
  CHECK(saw_flatten);
}

// ---------------------------------------------------------------------------
// model construction
// ---------------------------------------------------------------------------

TEST_CASE("build_model: parameter order, shapes, zero biases") {
  auto m = build_model<float>(tiny_spec(), 11);
  REQUIRE(m.params.size() == 18);  // 6 conv pairs + 3 fc pairs
  CHECK(m.params[0].name == "conv1.weight");
  CHECK(m.params[0].value->shape() == std::vector<std::int64_t>({8, 3, 3, 3}));
  CHECK(m.params[1].name == "conv1.bias");
  CHECK(m.params[11].name == "conv6.bias");
  CHECK(m.params[12].name == "fc1.weight");
  CHECK(m.params[12].value->shape() == std::vector<std::int64_t>({32, 32}));
  CHECK(m.params[16].name == "fc3.weight");
  CHECK(m.params[16].value->shape() == std::vector<std::int64_t>({16, 5}));
  CHECK(m.params[17].name == "fc3.bias");
  for (const auto& p : m.params) {
    // biases and the final classifier weights start at zero
    if (p.name.find(".bias") == std::string::npos && p.name != "fc3.weight")
      continue;
    for (auto v : p.value->values()) CHECK(v == 0.0f);
  }
  bool conv1_nonzero = false;
  for (auto v : m.params[0].value->values()) conv1_nonzero |= v != 0.0f;
  CHECK(conv1_nonzero);
  CHECK(m.seed == 11);
}

TEST_CASE("build_model: deterministic per seed") {
  auto a = build_model<float>(tiny_spec(), 42);
  auto b = build_model<float>(tiny_spec(), 42);
  auto c = build_model<float>(tiny_spec(), 43);
  bool same_ab = true, same_ac = true;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    same_ab = same_ab && a.params[i].value->values() == b.params[i].value->values();
    same_ac = same_ac && a.params[i].value->values() == c.params[i].value->values();
  }
  CHECK(same_ab);
  CHECK_FALSE(same_ac);
}

TEST_CASE("build_model: He-normal scale on a wide layer") {
  // big FC layer gives tight statistics: std should be sqrt(2/fan_in)
  ModelSpec spec;
  spec.input_size = 8;
  spec.conv_channels = {8};
  spec.pool_after = {1};
  spec.fc_widths = {2000, 5};
  spec.num_classes = 5;
  auto m = build_model<double>(spec, 3);
  auto& w = m.param("fc1.weight");  // [128, 2000]
  const double fan_in = 8 * 4 * 4;
  const double want_std = std::sqrt(2.0 / fan_in);
  double sum = 0, sum2 = 0;
  for (auto v : w.value->values()) {
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(w.value->numel());
  const double mean = sum / n;
  const double std_dev = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(mean) < 0.01 * want_std * 10);
  CHECK(std_dev == doctest::Approx(want_std).epsilon(0.02));
}

// ---------------------------------------------------------------------------
// forward pass
// ---------------------------------------------------------------------------

TEST_CASE("forward: logits shape and inference determinism") {
  auto m = build_model<float>(tiny_spec(), 5);
  auto x = random_images<float>(2, 16, 1);
  core::Tape<float> tape(false);
  auto a = forward(tape, m, x, false);
  auto b = forward(tape, m, x, false);
  REQUIRE(a->shape() == std::vector<std::int64_t>({2, 5}));
  CHECK(a->values() == b->values());
}

TEST_CASE("forward: input shape violations are precondition errors") {
  auto m = build_model<float>(tiny_spec(), 5);
  core::Tape<float> tape(false);
  CHECK_THROWS_AS(forward(tape, m, random_images<float>(1, 8, 0), false),
                  PreconditionError);
  auto bad_channels = core::make_tensor<float>({1, 1, 16, 16});
  CHECK_THROWS_AS(forward(tape, m, bad_channels, false), PreconditionError);
  auto not_batched = core::make_tensor<float>({3, 16, 16});
  CHECK_THROWS_AS(forward(tape, m, not_batched, false), PreconditionError);
}

TEST_CASE("forward: fresh model emits near-uniform class probabilities") {
  // zero biases + symmetric He init: average softmax over random inputs
  // stays close to 1/C per class
  auto m = build_model<float>(reduced_spec(), 1234);
  auto x = random_images<float>(32, 64, 9);
  core::Tape<float> tape(false);
  auto logits = forward(tape, m, x, false);
  auto loss = core::softmax_cross_entropy(tape, logits,
                                          std::vector<std::int64_t>(32, 0));
  std::vector<double> mean_prob(62, 0.0);
  for (std::int64_t i = 0; i < 32; ++i)
    for (std::int64_t c = 0; c < 62; ++c)
      mean_prob[static_cast<std::size_t>(c)] +=
          static_cast<double>(loss.probs->data()[i * 62 + c]) / 32.0;
  for (std::int64_t c = 0; c < 62; ++c) {
    CHECK(mean_prob[static_cast<std::size_t>(c)] >= 0.8 / 62.0);
    CHECK(mean_prob[static_cast<std::size_t>(c)] <= 1.2 / 62.0);
  }
}

TEST_CASE("forward: dropout active only in training mode") {
  // The untrained classifier head is zero, so dropout's effect is read
  // off the fc2 activations (downstream of the first dropout site).
  auto m = build_model<float>(tiny_spec(), 7);
  auto x = random_images<float>(3, 16, 2);
  core::Tape<float> tape(false);
  auto fc2_at = [&](bool training, std::uint64_t seed) {
    CaptureMap<float> capture;
    const std::set<std::string> tags = {"fc2"};
    forward(tape, m, x, training, seed, &capture, &tags);
    return capture.at("fc2")->values();
  };
  auto eval_a = fc2_at(false, 5);
  auto train_a = fc2_at(true, 5);
  auto train_b = fc2_at(true, 5);
  auto train_c = fc2_at(true, 6);
  CHECK(eval_a != train_a);
  CHECK(train_a == train_b);  // same mask seed
  CHECK(train_a != train_c);  // different mask seed
}

TEST_CASE("forward: inference is invariant to dropout_p") {
  ModelSpec s1 = tiny_spec();
  ModelSpec s2 = tiny_spec();
  s2.dropout_p = 0.9;
  auto m1 = build_model<float>(s1, 21);
  auto m2 = build_model<float>(s2, 21);
  auto x = random_images<float>(2, 16, 3);
  core::Tape<float> tape(false);
  CHECK(forward(tape, m1, x, false)->values() ==
        forward(tape, m2, x, false)->values());
}

TEST_CASE("forward: capture copies activations without changing logits") {
  auto m = build_model<float>(tiny_spec(), 31);
  auto x = random_images<float>(2, 16, 4);
  core::Tape<float> tape(false);
  auto plain = forward(tape, m, x, false);

  CaptureMap<float> capture;
  const std::set<std::string> tags = {"conv1", "relu1", "pool1",
                                      "flatten", "fc1", "logits"};
  auto captured = forward(tape, m, x, false, 0, &capture, &tags);
  // bit-identical logits with and without capture
  REQUIRE(plain->numel() == captured->numel());
  for (std::int64_t i = 0; i < plain->numel(); ++i)
    CHECK(plain->data()[i] == captured->data()[i]);

  REQUIRE(capture.size() == tags.size());
  CHECK(capture["conv1"]->shape() == std::vector<std::int64_t>({2, 8, 16, 16}));
  CHECK(capture["pool1"]->shape() == std::vector<std::int64_t>({2, 8, 8, 8}));
  CHECK(capture["flatten"]->shape() == std::vector<std::int64_t>({2, 32}));
  CHECK(capture["fc1"]->shape() == std::vector<std::int64_t>({2, 32}));
  CHECK(capture["logits"]->shape() == std::vector<std::int64_t>({2, 5}));
  // conv output precedes the nonlinearity; relu output is clamped
  bool conv_has_negative = false, relu_all_nonneg = true;
  for (auto v : capture["conv1"]->values()) conv_has_negative |= v < 0;
  for (auto v : capture["relu1"]->values()) relu_all_nonneg &= v >= 0;
  CHECK(conv_has_negative);
  CHECK(relu_all_nonneg);
  // captured tensors are copies, not aliases of live graph tensors
  CHECK(capture["logits"].get() != captured.get());

  const std::set<std::string> unknown = {"conv9"};
  CHECK_THROWS_AS(forward(tape, m, x, false, 0, &capture, &unknown),
                  ConfigError);
}

// ---------------------------------------------------------------------------
// feature extraction
// ---------------------------------------------------------------------------

TEST_CASE("extract_features: taps, shapes, nonnegativity, determinism") {
  auto m = build_model<float>(tiny_spec(), 17);
  auto x = random_images<float>(4, 16, 8);
  auto flat = extract_features(m, x, "flatten");
  auto fc1 = extract_features(m, x, "fc1");
  auto fc2 = extract_features(m, x, "fc2");
  CHECK(flat->shape() == std::vector<std::int64_t>({4, 32}));
  CHECK(fc1->shape() == std::vector<std::int64_t>({4, 32}));
  CHECK(fc2->shape() == std::vector<std::int64_t>({4, 16}));
  for (auto v : fc1->values()) CHECK(v >= 0.0f);
  for (auto v : fc2->values()) CHECK(v >= 0.0f);
  CHECK_THROWS_AS(extract_features(m, x, "fc3"), ConfigError);
  CHECK_THROWS_AS(extract_features(m, x, "pool7"), ConfigError);

  // identical images -> identical rows
  auto two = core::make_tensor<float>({2, 3, 16, 16});
  for (std::int64_t i = 0; i < two->numel() / 2; ++i) {
    two->data()[i] = x->data()[i];
    two->data()[two->numel() / 2 + i] = x->data()[i];
  }
  auto rows = extract_features(m, two, "fc2");
  for (std::int64_t j = 0; j < 16; ++j)
    CHECK(rows->data()[j] == rows->data()[16 + j]);
}

TEST_CASE("extract_features: dropout plays no part") {
  ModelSpec s1 = tiny_spec();
  ModelSpec s2 = tiny_spec();
  s2.dropout_p = 0.9;
  auto m1 = build_model<float>(s1, 23);
  auto m2 = build_model<float>(s2, 23);
  auto x = random_images<float>(3, 16, 5);
  CHECK(extract_features(m1, x, "fc2")->values() ==
        extract_features(m2, x, "fc2")->values());
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

TEST_CASE("evaluate: confusion identity and chance-level accuracy") {
  data::Dataset ds = tiny_synth(5, 30, 77);
  auto m = build_model<float>(tiny_spec(), 99);
  EvalResult r = evaluate(m, ds, data::Split::test, 8);
  const std::int64_t total = static_cast<std::int64_t>(
      ds.indices_of(data::Split::test).size());
  std::int64_t sum = 0, diag = 0;
  for (std::int64_t i = 0; i < 5; ++i)
    for (std::int64_t j = 0; j < 5; ++j) {
      sum += r.confusion[static_cast<std::size_t>(i * 5 + j)];
      if (i == j) diag += r.confusion[static_cast<std::size_t>(i * 5 + j)];
    }
  CHECK(sum == total);
  CHECK(r.accuracy ==
        static_cast<double>(diag) / static_cast<double>(total));
  // untrained net is a near-constant predictor; balanced data pins
  // accuracy to roughly chance
  CHECK(r.accuracy >= 0.2 - 0.15);
  CHECK(r.accuracy <= 0.2 + 0.15);
  CHECK(std::isfinite(r.mean_loss));
}

TEST_CASE("evaluate: batch size does not change the result") {
  data::Dataset ds = tiny_synth(5, 20, 31);
  auto m = build_model<float>(tiny_spec(), 1);
  EvalResult a = evaluate(m, ds, data::Split::val, 1);
  EvalResult b = evaluate(m, ds, data::Split::val, 7);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.confusion == b.confusion);
  CHECK(a.mean_loss == doctest::Approx(b.mean_loss).epsilon(1e-6));
}

TEST_CASE("evaluate: empty split is a usage error") {
  data::Dataset ds = tiny_synth(5, 20, 31);
  data::split(ds, 1.0, 0.0, 0.0, 0);
  auto m = build_model<float>(tiny_spec(), 1);
  CHECK_THROWS_AS(evaluate(m, ds, data::Split::test, 4), UsageError);
}

TEST_CASE("initial loss on balanced classes is close to ln(C)") {
  data::Dataset ds = tiny_synth(5, 30, 13);
  auto m = build_model<float>(tiny_spec(), 2);
  EvalResult r = evaluate(m, ds, data::Split::train, 16);
  CHECK(r.mean_loss == doctest::Approx(std::log(5.0)).epsilon(0.05));
}

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

namespace {

TrainConfig quick_config(std::int64_t epochs, double lr,
                         std::uint64_t seed = 5) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.lr = lr;
  cfg.batch_train = 16;
  cfg.batch_pred = 8;
  cfg.workers = 1;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("train: loss falls, history is complete, best model is restored") {
  data::Dataset ds = tiny_synth(5, 40, 2025);
  auto m = build_model<float>(tiny_spec(), 8);
  std::int64_t callbacks = 0;
  TrainHistory h = train(m, ds, quick_config(8, 2e-3),
                         [&](const EpochRecord&) { callbacks += 1; });
  REQUIRE(h.epochs.size() == 8);
  CHECK(callbacks == 8);
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    CHECK(h.epochs[i].epoch == static_cast<std::int64_t>(i + 1));
    CHECK(h.epochs[i].train_loss >= 0);
    CHECK(std::isfinite(h.epochs[i].val_loss));
    CHECK(h.epochs[i].seconds >= 0);
  }
  CHECK(h.epochs.back().train_loss < h.epochs.front().train_loss);
  REQUIRE(h.best_epoch >= 1);
  CHECK(h.best_val_acc >= h.epochs.front().val_acc);
  // the model handed back is the best-validation-epoch parameter set
  EvalResult val = evaluate(m, ds, data::Split::val, 8);
  CHECK(val.accuracy == h.best_val_acc);
}

TEST_CASE("train: two runs with one worker and the same seed are identical") {
  data::Dataset ds = tiny_synth(4, 30, 404);
  auto m1 = build_model<float>(tiny_spec(4), 6);
  auto m2 = build_model<float>(tiny_spec(4), 6);
  TrainHistory h1 = train(m1, ds, quick_config(4, 1e-3));
  TrainHistory h2 = train(m2, ds, quick_config(4, 1e-3));
  REQUIRE(h1.epochs.size() == h2.epochs.size());
  for (std::size_t i = 0; i < h1.epochs.size(); ++i) {
    CHECK(h1.epochs[i].train_loss == h2.epochs[i].train_loss);
    CHECK(h1.epochs[i].train_acc == h2.epochs[i].train_acc);
    CHECK(h1.epochs[i].val_loss == h2.epochs[i].val_loss);
    CHECK(h1.epochs[i].val_acc == h2.epochs[i].val_acc);
  }
  for (std::size_t p = 0; p < m1.params.size(); ++p)
    CHECK(m1.params[p].value->values() == m2.params[p].value->values());
}

TEST_CASE("train: zero learning rate runs but leaves the model unchanged") {
  data::Dataset ds = tiny_synth(4, 20, 55);
  auto m = build_model<float>(tiny_spec(4), 3);
  const auto before = m.params[0].value->values();
  TrainHistory h = train(m, ds, quick_config(3, 0.0));
  REQUIRE(h.epochs.size() == 3);
  for (const auto& e : h.epochs) CHECK(e.val_acc == h.epochs[0].val_acc);
  CHECK(m.params[0].value->values() == before);
}

TEST_CASE("train: argument and split validation") {
  data::Dataset ds = tiny_synth(4, 20, 66);
  auto m = build_model<float>(tiny_spec(4), 3);
  CHECK_THROWS_AS(train(m, ds, quick_config(0, 1e-3)), UsageError);
  CHECK_THROWS_AS(train(m, ds, quick_config(1, -1e-3)), PreconditionError);
  data::Dataset no_val = tiny_synth(4, 20, 66);
  data::split(no_val, 1.0, 0.0, 0.0, 0);
  CHECK_THROWS_AS(train(m, no_val, quick_config(1, 1e-3)), UsageError);
  data::Dataset unsplit = data::synth_generate(4, 5, 16, 1);
  CHECK_THROWS_AS(train(m, unsplit, quick_config(1, 1e-3)), UsageError);
}

TEST_CASE("train: non-finite loss aborts with a diagnostic naming the batch") {
  data::Dataset ds = tiny_synth(4, 20, 88);
  auto m = build_model<float>(tiny_spec(4), 3);
  // an infinite logit bias guarantees a non-finite loss on the first batch
  m.param("fc3.bias").value->data()[0] =
      std::numeric_limits<float>::infinity();
  CHECK_THROWS_WITH_AS(train(m, ds, quick_config(4, 1e-3)),
                       doctest::Contains("batch"), Error);
}

TEST_CASE("train: early stopping on a flat validation curve") {
  data::Dataset ds = tiny_synth(4, 20, 99);
  auto m = build_model<float>(tiny_spec(4), 3);
  TrainConfig cfg = quick_config(10, 0.0);  // lr 0: val never improves
  cfg.early_stop_patience = 2;
  TrainHistory h = train(m, ds, cfg);
  CHECK(h.best_epoch == 1);
  CHECK(h.epochs.size() == 3);  // epochs 2 and 3 exhaust the patience
}

TEST_CASE("train: periodic checkpoints land on disk and load") {
  const fs::path dir = fresh_dir("periodic");
  data::Dataset ds = tiny_synth(4, 20, 12);
  auto m = build_model<float>(tiny_spec(4), 3);
  TrainConfig cfg = quick_config(4, 1e-3);
  cfg.checkpoint_every = 2;
  cfg.checkpoint_dir = dir.string();
  train(m, ds, cfg);
  CHECK(fs::exists(dir / "epoch_2.adnk"));
  CHECK(fs::exists(dir / "epoch_4.adnk"));
  auto [loaded, history] = load_checkpoint<float>((dir / "epoch_2.adnk").string());
  CHECK(history.epochs.size() == 2);
  CHECK(loaded.spec.num_classes == 4);
}

// ---------------------------------------------------------------------------
// prediction
// ---------------------------------------------------------------------------

TEST_CASE("predict: catalog checks, confidence, agreement with evaluate") {
  data::Dataset ds = tiny_synth(5, 30, 500);
  auto m = build_model<float>(tiny_spec(), 44);
  const auto& img = ds.images[0];

  Prediction p = predict(m, ds.catalog, img);
  CHECK(p.index >= 0);
  CHECK(p.index < 5);
  CHECK(p.twi == ds.catalog.at(p.index).twi);
  CHECK(p.english == ds.catalog.at(p.index).english);
  CHECK(p.confidence > 0.0);
  CHECK(p.confidence <= 1.0);

  // same argmax as a manual forward pass
  auto x = core::make_tensor<float>({1, 3, 16, 16});
  data::preprocess_into(img, 16, x->data());
  core::Tape<float> tape(false);
  auto logits = forward(tape, m, x, false);
  CHECK(p.index == cnn::detail::argmax_row(logits->data(), 5));

  data::LabelCatalog wrong({{"a", "x"}, {"b", "y"}});
  CHECK_THROWS_AS(predict(m, wrong, img), ConfigError);
}

TEST_CASE("predict: argmax tie-break picks the lower index") {
  const float row_tie[4] = {1.0f, 3.0f, 3.0f, 2.0f};
  CHECK(cnn::detail::argmax_row(row_tie, 4) == 1);
  const float row_all_equal[3] = {0.5f, 0.5f, 0.5f};
  CHECK(cnn::detail::argmax_row(row_all_equal, 3) == 0);
}

TEST_CASE("predict: undecodable image file is an input error") {
  const fs::path dir = fresh_dir("predict_bad");
  std::ofstream(dir / "junk.png") << "not an image";
  data::Dataset ds = tiny_synth(5, 5, 1);
  auto m = build_model<float>(tiny_spec(), 44);
  CHECK_THROWS_AS(predict(m, ds.catalog, (dir / "junk.png").string()),
                  InputError);
}

// ---------------------------------------------------------------------------
// checkpointing
// ---------------------------------------------------------------------------

namespace {

TrainHistory fake_history() {
  TrainHistory h;
  for (int i = 1; i <= 3; ++i) {
    EpochRecord e;
    e.epoch = i;
    e.train_loss = 1.0 / i;
    e.train_acc = 0.2 * i;
    e.val_loss = 1.1 / i;
    e.val_acc = 0.19 * i;
    e.seconds = 2.5 * i;
    e.peak_mem_bytes = 1000000 + i;
    h.epochs.push_back(e);
  }
  h.best_epoch = 3;
  h.best_val_acc = 0.57;
  return h;
}

}  // namespace

TEST_CASE("checkpoint: round trip is bit-exact on parameters and history") {
  const fs::path dir = fresh_dir("roundtrip");
  auto m = build_model<float>(tiny_spec(), 77);
  const TrainHistory h = fake_history();
  const std::string path = (dir / "model.adnk").string();
  save_checkpoint(m, h, path);

  auto [back, hback] = load_checkpoint<float>(path);
  CHECK(back.seed == 77);
  CHECK(back.spec.input_size == m.spec.input_size);
  CHECK(back.spec.conv_channels == m.spec.conv_channels);
  CHECK(back.spec.pool_after == m.spec.pool_after);
  CHECK(back.spec.fc_widths == m.spec.fc_widths);
  CHECK(back.spec.num_classes == m.spec.num_classes);
  CHECK(back.spec.dropout_p == m.spec.dropout_p);
  REQUIRE(back.params.size() == m.params.size());
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    CHECK(back.params[i].name == m.params[i].name);
    CHECK(back.params[i].value->values() == m.params[i].value->values());
  }
  REQUIRE(hback.epochs.size() == h.epochs.size());
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    CHECK(hback.epochs[i].train_loss == h.epochs[i].train_loss);
    CHECK(hback.epochs[i].val_acc == h.epochs[i].val_acc);
    CHECK(hback.epochs[i].seconds == h.epochs[i].seconds);
    CHECK(hback.epochs[i].peak_mem_bytes == h.epochs[i].peak_mem_bytes);
  }
  CHECK(hback.best_epoch == 3);
  CHECK(hback.best_val_acc == 0.57);
}

TEST_CASE("checkpoint: evaluation is unchanged across a save/load cycle") {
  const fs::path dir = fresh_dir("eval_cycle");
  data::Dataset ds = tiny_synth(5, 20, 321);
  auto m = build_model<float>(tiny_spec(), 5);
  train(m, ds, quick_config(2, 1e-3));
  EvalResult before = evaluate(m, ds, data::Split::test, 8);
  const std::string path = (dir / "trained.adnk").string();
  save_checkpoint(m, TrainHistory{}, path);
  auto [loaded, _] = load_checkpoint<float>(path);
  EvalResult after = evaluate(loaded, ds, data::Split::test, 8);
  CHECK(after.accuracy == before.accuracy);
  CHECK(after.mean_loss == before.mean_loss);
  CHECK(after.confusion == before.confusion);
}

TEST_CASE("checkpoint: 64-bit parameters travel as 32-bit payload") {
  const fs::path dir = fresh_dir("f64");
  auto m = build_model<double>(tiny_spec(), 13);
  const std::string path = (dir / "model.adnk").string();
  save_checkpoint(m, TrainHistory{}, path);
  auto [back, _] = load_checkpoint<double>(path);
  for (std::size_t p = 0; p < m.params.size(); ++p) {
    const auto& orig = m.params[p].value->values();
    const auto& got = back.params[p].value->values();
    for (std::size_t i = 0; i < orig.size(); ++i)
      CHECK(got[i] == static_cast<double>(static_cast<float>(orig[i])));
  }
}

TEST_CASE("checkpoint: distinct failures for version, truncation, corruption") {
  const fs::path dir = fresh_dir("failures");
  auto m = build_model<float>(tiny_spec(), 3);
  const std::string path = (dir / "model.adnk").string();
  save_checkpoint(m, fake_history(), path);

  auto bytes = [&]() {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  }();

  auto write_variant = [&](const std::string& name,
                           const std::vector<char>& content) {
    std::ofstream out(dir / name, std::ios::binary);
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    return (dir / name).string();
  };

  // unsupported version (bytes 4..5 hold the u16 version)
  auto versioned = bytes;
  versioned[4] = 99;
  CHECK_THROWS_AS(load_checkpoint<float>(write_variant("bad_version", versioned)),
                  VersionError);

  // wrong magic
  auto magicked = bytes;
  magicked[0] = 'X';
  CHECK_THROWS_AS(load_checkpoint<float>(write_variant("bad_magic", magicked)),
                  InputError);

  // cut mid-payload
  auto cut = std::vector<char>(bytes.begin(),
                               bytes.begin() + bytes.size() * 6 / 10);
  CHECK_THROWS_AS(load_checkpoint<float>(write_variant("cut", cut)),
                  TruncationError);

  // cut inside the trailing checksum
  auto crc_cut = std::vector<char>(bytes.begin(), bytes.end() - 2);
  CHECK_THROWS_AS(load_checkpoint<float>(write_variant("crc_cut", crc_cut)),
                  TruncationError);

  // flip one payload byte near the end of the parameter block
  auto corrupt = bytes;
  corrupt[corrupt.size() - 10] ^= 0x40;
  CHECK_THROWS_AS(load_checkpoint<float>(write_variant("corrupt", corrupt)),
                  ChecksumError);

  // the original still loads
  CHECK_NOTHROW(load_checkpoint<float>(path));
}
