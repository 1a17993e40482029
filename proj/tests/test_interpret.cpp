#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adinkra/cnn/model.hpp"
#include "adinkra/core/rng.hpp"
#include "adinkra/data/image_io.hpp"
#include "adinkra/interpret/heatmap.hpp"

using namespace adinkra;
using namespace adinkra::interpret;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "adinkra_interpret_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

cnn::ModelSpec tiny_spec() {
  cnn::ModelSpec spec;
  spec.input_size = 16;
  spec.input_channels = 3;
  spec.conv_channels = {4, 8};
  spec.pool_after = {2};
  spec.fc_widths = {32, 5};
  spec.num_classes = 5;
  return spec;
}

core::TensorPtr<float> random_image(std::int64_t n, std::int64_t size,
                                    std::uint64_t seed) {
  core::Rng rng(seed);
  auto image = core::make_tensor<float>({n, 3, size, size});
  for (auto& v : image->values())
    v = static_cast<float>(rng.uniform(0.0, 1.0));
  return image;
}

ActivationCapture make_capture(std::int64_t channels, std::int64_t height,
                               std::int64_t width, float fill) {
  ActivationCapture cap;
  cap.tag = "conv1";
  cap.channels = channels;
  cap.height = height;
  cap.width = width;
  cap.maps.assign(static_cast<std::size_t>(channels * height * width), fill);
  return cap;
}

data::LabeledImage gray_image(std::int64_t height, std::int64_t width,
                              std::uint64_t seed) {
  core::Rng rng(seed);
  data::LabeledImage image;
  image.height = height;
  image.width = width;
  image.channels = 1;
  for (std::int64_t i = 0; i < height * width; ++i)
    image.pixels.push_back(
        static_cast<std::uint8_t>(rng.uniform_index(256)));
  return image;
}

std::vector<std::uint8_t> replicate_rgb(const data::LabeledImage& image) {
  std::vector<std::uint8_t> out;
  for (const auto p : image.pixels) {
    out.push_back(p);
    out.push_back(p);
    out.push_back(p);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// capture
// ---------------------------------------------------------------------------

TEST_CASE("capture returns tagged maps with the architecture's shapes") {
  auto model = cnn::build_model<float>(tiny_spec(), 3);
  const auto image = random_image(1, 16, 81);
  const auto captures =
      capture(model, image, {"conv1", "relu2", "pool1", "conv1"});
  REQUIRE(captures.size() == 4);
  CHECK(captures[0].tag == "conv1");
  CHECK(captures[0].channels == 4);
  CHECK(captures[0].height == 16);
  CHECK(captures[0].width == 16);
  CHECK(captures[1].channels == 8);
  CHECK(captures[1].height == 16);
  CHECK(captures[2].tag == "pool1");
  CHECK(captures[2].channels == 8);
  CHECK(captures[2].height == 8);
  CHECK(captures[2].width == 8);
  CHECK(captures[3].maps == captures[0].maps);  // duplicate tag repeats

  for (const auto v : captures[1].maps) CHECK(v >= 0.0f);  // post-ReLU

  const auto again = capture(model, image, {"conv1"});
  CHECK(again[0].maps == captures[0].maps);
}

TEST_CASE("capture leaves the forward pass bit-identical") {
  auto model = cnn::build_model<float>(tiny_spec(), 5);
  const auto image = random_image(1, 16, 82);

  core::Tape<float> plain_tape;
  const auto plain =
      cnn::forward(plain_tape, model, image, /*training=*/false);

  core::Tape<float> hooked_tape;
  cnn::CaptureMap<float> captured;
  const std::set<std::string> tags = {"conv1", "relu1", "conv2", "relu2",
                                      "pool1"};
  const auto hooked = cnn::forward(hooked_tape, model, image,
                                   /*training=*/false, 0, &captured, &tags);
  CHECK(plain->values() == hooked->values());
  CHECK(captured.size() == 5);
}

TEST_CASE("capture rejects unknown and non-spatial tags") {
  auto model = cnn::build_model<float>(tiny_spec(), 7);
  const auto image = random_image(1, 16, 83);
  CHECK_THROWS_AS(capture(model, image, {"conv9"}), ConfigError);
  CHECK_THROWS_AS(capture(model, image, {"pool2"}), ConfigError);
  CHECK_THROWS_AS(capture(model, image, {"banana"}), ConfigError);
  CHECK_THROWS_AS(capture(model, image, {"flatten"}), ConfigError);
  CHECK_THROWS_AS(capture(model, image, {"fc1"}), ConfigError);
  CHECK_THROWS_AS(capture(model, image, {"logits"}), ConfigError);
  CHECK_THROWS_AS(capture(model, random_image(2, 16, 84), {"conv1"}),
                  PreconditionError);
}

// ---------------------------------------------------------------------------
// heatmap aggregation
// ---------------------------------------------------------------------------

TEST_CASE("all-negative maps rectify to an all-zero heatmap") {
  const auto cap = make_capture(2, 3, 3, -1.0f);
  const auto hm = heatmap(cap, 8);
  CHECK(hm.size == 8);
  REQUIRE(hm.values.size() == 64);
  for (const auto v : hm.values) CHECK(v == 0.0f);
}

TEST_CASE("a single positive pixel peaks at its upsampled location") {
  auto cap = make_capture(1, 4, 4, 0.0f);
  cap.maps[1 * 4 + 2] = 2.5f;  // row 1, column 2
  const auto hm = heatmap(cap, 8);
  float top = 0.0f;
  for (const auto v : hm.values) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
    top = std::max(top, v);
  }
  CHECK(top == 1.0f);
  // Source pixel (1,2) sits between output rows 2-3 and columns 4-5.
  for (const std::int64_t y : {2, 3})
    for (const std::int64_t x : {4, 5})
      CHECK(hm.values[y * 8 + x] == 1.0f);
  CHECK(hm.values[0] == 0.0f);
}

TEST_CASE("random maps normalise onto [0,1] with max exactly one") {
  core::Rng rng(901);
  auto cap = make_capture(6, 6, 6, 0.0f);
  for (auto& v : cap.maps) v = static_cast<float>(rng.normal());
  const auto hm = heatmap(cap, 16);
  float lo = 1.0f, hi = 0.0f;
  for (const auto v : hm.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= 0.0f);
  CHECK(lo == 0.0f);  // min-max normalization pins the minimum
  CHECK(hi == 1.0f);
}

TEST_CASE("heatmap is invariant under positive scaling of the capture") {
  core::Rng rng(902);
  auto cap = make_capture(3, 5, 5, 0.0f);
  for (auto& v : cap.maps) v = static_cast<float>(rng.normal());
  const auto base = heatmap(cap, 12);

  for (const float scale : {4.0f, 0.5f}) {  // powers of two: bit-exact
    auto scaled = cap;
    for (auto& v : scaled.maps) v *= scale;
    CHECK(heatmap(scaled, 12).values == base.values);
  }

  auto scaled = cap;
  for (auto& v : scaled.maps) v *= 3.0f;
  const auto near = heatmap(scaled, 12);
  for (std::size_t i = 0; i < base.values.size(); ++i)
    CHECK(near.values[i] ==
          doctest::Approx(base.values[i]).epsilon(1e-6));
}

TEST_CASE("constant maps normalise to all ones, zero maps stay zero") {
  const auto ones = heatmap(make_capture(2, 3, 3, 0.7f), 6);
  for (const auto v : ones.values) CHECK(v == 1.0f);
  const auto zeros = heatmap(make_capture(2, 3, 3, 0.0f), 6);
  for (const auto v : zeros.values) CHECK(v == 0.0f);
}

TEST_CASE("heatmap rejects inconsistent captures") {
  auto cap = make_capture(2, 3, 3, 1.0f);
  cap.maps.pop_back();
  CHECK_THROWS_AS(heatmap(cap, 8), PreconditionError);
  CHECK_THROWS_AS(heatmap(make_capture(0, 3, 3, 1.0f), 8), PreconditionError);
  CHECK_THROWS_AS(heatmap(make_capture(2, 3, 3, 1.0f), 0), PreconditionError);
}

// ---------------------------------------------------------------------------
// colormap and overlay
// ---------------------------------------------------------------------------

TEST_CASE("jet palette endpoints and midpoint follow the classic ramp") {
  const auto& palette = jet_palette();
  CHECK(palette[0] == std::array<std::uint8_t, 3>{0, 0, 128});
  CHECK(palette[255] == std::array<std::uint8_t, 3>{128, 0, 0});
  CHECK(palette[128][1] == 255);  // mid intensities are fully green
  CHECK(&jet_palette() == &palette);
}

TEST_CASE("overlay with alpha zero is the original, bit for bit") {
  const auto original = gray_image(9, 11, 31);
  Heatmap hm;
  hm.tag = "conv1";
  hm.size = 4;
  hm.values.assign(16, 0.5f);
  const auto out = overlay(original, hm, 0.0);
  CHECK(out.height == 9);
  CHECK(out.width == 11);
  CHECK(out.channels == 3);
  CHECK(out.pixels == replicate_rgb(original));
}

TEST_CASE("overlay with alpha one is the colormapped heatmap") {
  const auto original = gray_image(6, 5, 32);
  core::Rng rng(903);
  Heatmap hm;
  hm.tag = "pool1";
  hm.size = 3;
  for (int i = 0; i < 9; ++i)
    hm.values.push_back(static_cast<float>(rng.uniform(0.0, 1.0)));
  const auto out = overlay(original, hm, 1.0);
  CHECK(out.pixels == colormapped(hm, 6, 5).pixels);
}

TEST_CASE("overlay blends with exact arithmetic on a single pixel") {
  data::LabeledImage original;
  original.height = 1;
  original.width = 1;
  original.channels = 1;
  original.pixels = {100};
  Heatmap hm;
  hm.tag = "conv1";
  hm.size = 1;
  hm.values = {1.0f};
  const auto out = overlay(original, hm, 0.4);
  const auto& hot = jet_palette()[255];
  for (int c = 0; c < 3; ++c)
    CHECK(out.pixels[c] ==
          static_cast<std::uint8_t>(
              std::lround(0.6 * 100.0 + 0.4 * hot[c])));

  hm.values = {0.0f};
  const auto cold = overlay(original, hm, 0.4);
  for (int c = 0; c < 3; ++c)
    CHECK(cold.pixels[c] ==
          static_cast<std::uint8_t>(
              std::lround(0.6 * 100.0 + 0.4 * jet_palette()[0][c])));
}

TEST_CASE("overlay validates alpha") {
  const auto original = gray_image(3, 3, 33);
  Heatmap hm;
  hm.tag = "conv1";
  hm.size = 2;
  hm.values.assign(4, 0.5f);
  CHECK_THROWS_AS(overlay(original, hm, -0.1), PreconditionError);
  CHECK_THROWS_AS(overlay(original, hm, 1.1), PreconditionError);
}

// ---------------------------------------------------------------------------
// panel rendering
// ---------------------------------------------------------------------------

TEST_CASE("rendered panel round-trips pixel exactly") {
  const auto dir = fresh_dir("panel");
  const auto original = gray_image(12, 10, 34);
  core::Rng rng(904);
  Heatmap hm;
  hm.tag = "relu2";
  hm.size = 8;
  for (int i = 0; i < 64; ++i)
    hm.values.push_back(static_cast<float>(rng.uniform(0.0, 1.0)));
  const auto overlaid = overlay(original, hm, 0.4);
  const auto path = (dir / "panel.png").string();
  render_panel(original, hm, overlaid, "relu2", path);

  const auto decoded = data::decode_image(path);
  CHECK(decoded.width == 3 * 10 + 4 * 8);
  CHECK(decoded.height == 12 + 16 + 2 * 8);
  CHECK(decoded.channels == 3);

  const auto expect_panel = [&](std::int64_t x0,
                                const std::vector<std::uint8_t>& panel) {
    for (std::int64_t y = 0; y < 12; ++y)
      for (std::int64_t x = 0; x < 10; ++x)
        for (std::int64_t c = 0; c < 3; ++c) {
          const auto at = ((y + 24) * decoded.width + x + x0) * 3 + c;
          REQUIRE(decoded.pixels[at] == panel[(y * 10 + x) * 3 + c]);
        }
  };
  expect_panel(8, replicate_rgb(original));
  expect_panel(2 * 8 + 10, colormapped(hm, 12, 10).pixels);
  expect_panel(3 * 8 + 2 * 10, overlaid.pixels);

  // The header strip carries the rendered layer-tag text.
  bool ink = false;
  for (std::int64_t y = 0; y < 16 && !ink; ++y)
    for (std::int64_t x = 0; x < decoded.width && !ink; ++x)
      ink = decoded.pixels[(y * decoded.width + x) * 3] == 0;
  CHECK(ink);
}

TEST_CASE("render_panel into a missing directory fails without output") {
  const auto dir = fresh_dir("panel_missing");
  const auto original = gray_image(8, 8, 35);
  Heatmap hm;
  hm.tag = "conv1";
  hm.size = 4;
  hm.values.assign(16, 0.25f);
  const auto overlaid = overlay(original, hm, 0.4);
  const auto path = (dir / "nope" / "panel.png").string();
  CHECK_THROWS_AS(render_panel(original, hm, overlaid, "conv1", path),
                  IoError);
  CHECK(!fs::exists(path));
}

TEST_CASE("render_panel demands a matching overlay") {
  const auto original = gray_image(8, 8, 36);
  Heatmap hm;
  hm.tag = "conv1";
  hm.size = 4;
  hm.values.assign(16, 0.25f);
  data::RawImage wrong;
  wrong.height = 4;
  wrong.width = 8;
  wrong.channels = 3;
  wrong.pixels.assign(4 * 8 * 3, 0);
  CHECK_THROWS_AS(
      render_panel(original, hm, wrong, "conv1", "/tmp/never.png"),
      PreconditionError);
}
