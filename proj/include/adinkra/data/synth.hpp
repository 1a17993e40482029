#pragma once

#include <cstdint>
#include <string>

#include "adinkra/data/dataset.hpp"

namespace adinkra::data {

// Procedural 62-class symbol corpus for desk-scale experiments. Every
// class is a distinct stroke program (rings, crosses, spirals, chevrons,
// lattices, dot grids, concentric polygons); every sample renders its
// class glyph under a randomized rotation (+-15 deg), scale (0.8-1.2),
// translation (+-10%), stroke width and foreground/background contrast,
// with 30% of samples emitted as single-channel grayscale. Sample pixels
// depend only on (seed, class, index), so regeneration is byte-stable.
// Catalog entries are `synth_k` / `synthetic symbol k`. The returned
// dataset carries no split assignment.
Dataset synth_generate(std::int64_t num_classes, std::int64_t per_class,
                       std::int64_t size, std::uint64_t seed);

// Renders one sample (used by synth_generate; exposed for tests).
LabeledImage synth_render(std::int64_t cls, std::int64_t index,
                          std::int64_t size, std::uint64_t seed);

// Materializes a dataset in the on-disk layout `out/<class_name>/*.png`
// plus `out/catalog.tsv`. Returns the number of files written.
std::int64_t materialize(const Dataset& ds, const std::string& out_dir);

inline constexpr std::int64_t kSynthMaxClasses = 62;

}  // namespace adinkra::data
