#include "adinkra/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "adinkra/core/rng.hpp"
#include "adinkra/data/image_io.hpp"

namespace adinkra::data {

namespace {

using adinkra::core::hash_combine;
using adinkra::core::Rng;

constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x, y;
};

// Glyph geometry lives in the unit square [-1,1]^2: stroked rings and
// segments plus filled discs, all with one shared stroke half-width.
struct Glyph {
  struct Ring {
    Vec2 c;
    double r;
  };
  struct Segment {
    Vec2 a, b;
  };
  struct Disc {
    Vec2 c;
    double r;
  };
  std::vector<Ring> rings;
  std::vector<Segment> segments;
  std::vector<Disc> discs;
};

void add_spiral(Glyph& g, double turns, bool clockwise) {
  const double theta_max = turns * 2.0 * kPi;
  const double step = 0.12;
  Vec2 prev{0.0, 0.0};
  bool have_prev = false;
  for (double t = 0.0; t <= theta_max + 1e-9; t += step) {
    const double r = 0.85 * t / theta_max;
    const double a = clockwise ? -t : t;
    Vec2 p{r * std::cos(a), r * std::sin(a)};
    if (have_prev) g.segments.push_back({prev, p});
    prev = p;
    have_prev = true;
  }
}

void add_regular_star(Glyph& g, int arms, double r0, double r1,
                      double phase) {
  for (int k = 0; k < arms; ++k) {
    const double a = phase + 2.0 * kPi * k / arms;
    g.segments.push_back(
        {{r0 * std::cos(a), r0 * std::sin(a)},
         {r1 * std::cos(a), r1 * std::sin(a)}});
  }
}

void add_polygon(Glyph& g, int sides, double r, double phase) {
  for (int k = 0; k < sides; ++k) {
    const double a0 = phase + 2.0 * kPi * k / sides;
    const double a1 = phase + 2.0 * kPi * (k + 1) / sides;
    g.segments.push_back({{r * std::cos(a0), r * std::sin(a0)},
                          {r * std::cos(a1), r * std::sin(a1)}});
  }
}

// The 62 class programs: eight motif families, each with eight structural
// variants; classes are numbered motif-major so neighbouring class
// indices look different.
Glyph build_glyph(std::int64_t cls) {
  const int m = static_cast<int>(cls % 8);
  const int v = static_cast<int>(cls / 8);
  Glyph g;
  switch (m) {
    case 0: {  // concentric rings, optional centre dot
      const int count = v + 1;
      for (int i = 0; i < count; ++i)
        g.rings.push_back({{0, 0}, 0.85 * (i + 1) / count});
      if (v >= 4) g.discs.push_back({{0, 0}, 0.12});
      break;
    }
    case 1: {  // radial star, outer ring on odd variants
      add_regular_star(g, v + 2, 0.0, 0.85, kPi / 2);
      if (v % 2 == 1) g.rings.push_back({{0, 0}, 0.85});
      break;
    }
    case 2: {  // spiral, alternating handedness, dot on late variants
      add_spiral(g, 1.0 + 0.5 * v, v % 2 == 1);
      if (v >= 5) g.discs.push_back({{0.0, 0.0}, 0.10});
      break;
    }
    case 3: {  // chevron stack
      const int count = v + 1;
      for (int i = 0; i < count; ++i) {
        const double y = -0.7 + 1.4 * (count == 1 ? 0.5 : i / double(count - 1));
        g.segments.push_back({{-0.7, y + 0.25}, {0.0, y - 0.25}});
        g.segments.push_back({{0.0, y - 0.25}, {0.7, y + 0.25}});
      }
      break;
    }
    case 4: {  // lattice of parallel lines, axis-aligned or diagonal
      const int lines = v % 4 + 2;
      const bool diagonal = v >= 4;
      for (int i = 0; i < lines; ++i) {
        const double t = -0.8 + 1.6 * (lines == 1 ? 0.5 : i / double(lines - 1));
        if (diagonal) {
          // lines y = x + c and y = -x + c clipped to the [-0.9,0.9] box
          const double c = t * 1.1;
          const double x0 = std::max(-0.9, -0.9 - c);
          const double x1 = std::min(0.9, 0.9 - c);
          if (x0 < x1) {
            g.segments.push_back({{x0, x0 + c}, {x1, x1 + c}});
            g.segments.push_back({{-x1, x1 + c}, {-x0, x0 + c}});
          }
        } else {
          g.segments.push_back({{t, -0.8}, {t, 0.8}});
          g.segments.push_back({{-0.8, t}, {0.8, t}});
        }
      }
      break;
    }
    case 5: {  // ring with interior spokes
      g.rings.push_back({{0, 0}, 0.8});
      add_regular_star(g, v + 1, 0.0, 0.8, kPi / 4);
      if (v >= 4) g.discs.push_back({{0, 0}, 0.14});
      break;
    }
    case 6: {  // dot grid, full or checkered
      const int grid = 2 + v % 4;
      const bool checker = v >= 4;
      for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
          if (checker && (i + j) % 2 == 1) continue;
          const double x =
              -0.7 + 1.4 * (grid == 1 ? 0.5 : i / double(grid - 1));
          const double y =
              -0.7 + 1.4 * (grid == 1 ? 0.5 : j / double(grid - 1));
          g.discs.push_back({{x, y}, 0.55 / grid});
        }
      break;
    }
    default: {  // concentric polygons: squares, or diamonds on late variants
      const int count = v % 4 + 1;
      const double phase = v >= 4 ? 0.0 : kPi / 4;
      for (int i = 0; i < count; ++i)
        add_polygon(g, 4, 0.95 * (i + 1) / count, phase);
      break;
    }
  }
  return g;
}

const Glyph& glyph_for(std::int64_t cls) {
  static const std::vector<Glyph> table = [] {
    std::vector<Glyph> t;
    t.reserve(kSynthMaxClasses);
    for (std::int64_t c = 0; c < kSynthMaxClasses; ++c)
      t.push_back(build_glyph(c));
    return t;
  }();
  return table[static_cast<std::size_t>(cls)];
}

double dist_segment(Vec2 p, Vec2 a, Vec2 b) {
  const double bax = b.x - a.x, bay = b.y - a.y;
  const double pax = p.x - a.x, pay = p.y - a.y;
  const double len2 = bax * bax + bay * bay;
  double t = len2 > 0 ? (pax * bax + pay * bay) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = pax - t * bax, dy = pay - t * bay;
  return std::sqrt(dx * dx + dy * dy);
}

// Signed distance from a glyph-space point to the ink boundary
// (negative inside ink).
double ink_distance(const Glyph& g, Vec2 p, double halfw) {
  double sd = 1e9;
  for (const auto& ring : g.rings) {
    const double dx = p.x - ring.c.x, dy = p.y - ring.c.y;
    sd = std::min(sd, std::abs(std::sqrt(dx * dx + dy * dy) - ring.r) - halfw);
  }
  for (const auto& seg : g.segments)
    sd = std::min(sd, dist_segment(p, seg.a, seg.b) - halfw);
  for (const auto& disc : g.discs) {
    const double dx = p.x - disc.c.x, dy = p.y - disc.c.y;
    sd = std::min(sd, std::sqrt(dx * dx + dy * dy) - disc.r);
  }
  return sd;
}

}  // namespace

LabeledImage synth_render(std::int64_t cls, std::int64_t index,
                          std::int64_t size, std::uint64_t seed) {
  if (cls < 0 || cls >= kSynthMaxClasses)
    throw PreconditionError("synth_render: class index out of range");
  Rng rng(hash_combine(seed, static_cast<std::uint64_t>(cls),
                       static_cast<std::uint64_t>(index)));

  // All random choices are drawn up front in a fixed order.
  const bool grayscale = rng.uniform() < 0.30;
  // Polarity is biased toward light backgrounds so class structure retains
  // a weak raw-pixel signature; a 50/50 coin would cancel it entirely in
  // per-class means.
  const bool dark_bg = rng.uniform() < 0.18;
  const double bg_luma = dark_bg ? rng.uniform(0.08, 0.30)
                                 : rng.uniform(0.65, 0.92);
  const double fg_luma = dark_bg ? rng.uniform(0.70, 0.98)
                                 : rng.uniform(0.02, 0.30);
  double bg_tint[3], fg_tint[3];
  for (int c = 0; c < 3; ++c) bg_tint[c] = rng.uniform(-0.12, 0.12);
  for (int c = 0; c < 3; ++c) fg_tint[c] = rng.uniform(-0.12, 0.12);
  const double theta = rng.uniform(-15.0, 15.0) * kPi / 180.0;
  const double scale = rng.uniform(0.8, 1.2);
  const double tx = rng.uniform(-0.2, 0.2);  // +-10% of the 2-wide span
  const double ty = rng.uniform(-0.2, 0.2);
  const double halfw = 0.045 * rng.uniform(0.7, 1.3);

  const Glyph& glyph = glyph_for(cls);
  const double cos_t = std::cos(-theta), sin_t = std::sin(-theta);
  const double aa = 1.5 * (2.0 / static_cast<double>(size)) / scale;

  LabeledImage img;
  img.height = size;
  img.width = size;
  img.channels = grayscale ? 1 : 3;
  img.label = cls;
  img.pixels.resize(static_cast<std::size_t>(size * size * img.channels));

  double bg[3], fg[3];
  for (int c = 0; c < 3; ++c) {
    bg[c] = std::clamp(bg_luma + (grayscale ? 0.0 : bg_tint[c]), 0.0, 1.0);
    fg[c] = std::clamp(fg_luma + (grayscale ? 0.0 : fg_tint[c]), 0.0, 1.0);
  }

  for (std::int64_t y = 0; y < size; ++y) {
    for (std::int64_t x = 0; x < size; ++x) {
      // pixel centre in [-1,1]^2, then the inverse sample transform
      const double px = (2.0 * (x + 0.5) / size) - 1.0 - tx;
      const double py = (2.0 * (y + 0.5) / size) - 1.0 - ty;
      const Vec2 q{(cos_t * px - sin_t * py) / scale,
                   (sin_t * px + cos_t * py) / scale};
      const double sd = ink_distance(glyph, q, halfw);
      const double cov = std::clamp(0.5 - sd / aa, 0.0, 1.0);
      for (std::int64_t c = 0; c < img.channels; ++c) {
        const double value = bg[c] * (1.0 - cov) + fg[c] * cov;
        img.pixels[static_cast<std::size_t>((y * size + x) * img.channels +
                                            c)] =
            static_cast<std::uint8_t>(std::lround(value * 255.0));
      }
    }
  }
  return img;
}

Dataset synth_generate(std::int64_t num_classes, std::int64_t per_class,
                       std::int64_t size, std::uint64_t seed) {
  if (num_classes < 1 || num_classes > kSynthMaxClasses)
    throw PreconditionError("synth_generate: class count must be in [1, " +
                            std::to_string(kSynthMaxClasses) + "], got " +
                            std::to_string(num_classes));
  if (per_class < 1)
    throw PreconditionError("synth_generate: per_class must be >= 1");
  if (size < 8)
    throw PreconditionError("synth_generate: size must be >= 8");
  Dataset ds;
  std::vector<LabelCatalog::Entry> entries;
  for (std::int64_t c = 0; c < num_classes; ++c)
    entries.push_back({"synth_" + std::to_string(c),
                       "synthetic symbol " + std::to_string(c)});
  ds.catalog = LabelCatalog(std::move(entries));
  ds.images.reserve(static_cast<std::size_t>(num_classes * per_class));
  for (std::int64_t c = 0; c < num_classes; ++c)
    for (std::int64_t i = 0; i < per_class; ++i)
      ds.images.push_back(synth_render(c, i, size, seed));
  return ds;
}

std::int64_t materialize(const Dataset& ds, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory: " + out_dir);
  ds.catalog.save((fs::path(out_dir) / "catalog.tsv").string());
  std::vector<std::int64_t> counter(
      static_cast<std::size_t>(ds.catalog.size()), 0);
  std::int64_t written = 0;
  for (const auto& img : ds.images) {
    const fs::path dir =
        fs::path(out_dir) / ds.catalog.at(img.label).twi;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir.string());
    char name[32];
    std::snprintf(name, sizeof(name), "img_%05lld.png",
                  static_cast<long long>(counter[static_cast<std::size_t>(
                      img.label)]++));
    encode_png((dir / name).string(), img.pixels.data(), img.height,
               img.width, img.channels);
    written += 1;
  }
  return written;
}

}  // namespace adinkra::data
