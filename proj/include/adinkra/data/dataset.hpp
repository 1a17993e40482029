#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "adinkra/core/error.hpp"
#include "adinkra/core/rng.hpp"
#include "adinkra/data/image_io.hpp"

namespace adinkra::data {

using adinkra::core::Rng;

// One sample: interleaved H x W x C 8-bit pixels (C = 1 or 3) plus its
// class index and, when loaded from disk, the source path.
struct LabeledImage {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 0;
  std::vector<std::uint8_t> pixels;
  std::int64_t label = -1;
  std::string source_path;
};

// Ordered class list: index -> (Twi name, English meaning). Line order in
// the catalog file defines the class indices.
class LabelCatalog {
 public:
  struct Entry {
    std::string twi;
    std::string english;
  };

  LabelCatalog() = default;
  explicit LabelCatalog(std::vector<Entry> entries)
      : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!index_.emplace(entries_[i].twi, static_cast<std::int64_t>(i)).second)
        throw InputError("duplicate catalog name: " + entries_[i].twi);
    }
  }

  static LabelCatalog load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open catalog: " + path);
    std::vector<Entry> entries;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw InputError("catalog line missing tab separator: " + line);
      entries.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    if (entries.empty()) throw InputError("empty catalog: " + path);
    return LabelCatalog(std::move(entries));
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write catalog: " + path);
    for (const auto& e : entries_) out << e.twi << '\t' << e.english << '\n';
    if (!out) throw IoError("catalog write failed: " + path);
  }

  std::int64_t size() const { return static_cast<std::int64_t>(entries_.size()); }
  const Entry& at(std::int64_t i) const {
    if (i < 0 || i >= size())
      throw PreconditionError("catalog index out of range");
    return entries_[static_cast<std::size_t>(i)];
  }
  // -1 when the name is unknown.
  std::int64_t index_of(const std::string& twi) const {
    const auto it = index_.find(twi);
    return it == index_.end() ? -1 : it->second;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::int64_t> index_;
};

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

inline Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw UsageError("unknown split name: " + name + " (want train|val|test)");
}

struct Dataset {
  std::vector<LabeledImage> images;
  LabelCatalog catalog;
  std::vector<Split> split_assignment;  // empty until split() runs

  std::int64_t num_classes() const { return catalog.size(); }

  std::vector<std::int64_t> indices_of(Split s) const {
    if (split_assignment.size() != images.size())
      throw UsageError("dataset has no split assignment yet");
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < images.size(); ++i)
      if (split_assignment[i] == s) out.push_back(static_cast<std::int64_t>(i));
    return out;
  }
};

struct LoadReport {
  std::int64_t loaded = 0;
  std::vector<std::string> skipped;  // undecodable files
};

// Loads `root/<twi_class_name>/*.png|*.jpg` with class indices taken from
// the catalog file (one `twi<TAB>english` line per class). Traversal is
// lexicographic — class names in catalog index order, file names sorted —
// so two loads of the same tree are identical. Undecodable files are
// recorded in the report and skipped.
inline Dataset load_directory(const std::string& root,
                              const std::string& catalog_path,
                              LoadReport* report = nullptr) {
  namespace fs = std::filesystem;
  Dataset ds;
  ds.catalog = LabelCatalog::load(catalog_path);
  if (!fs::is_directory(root))
    throw InputError("dataset root is not a directory: " + root);
  // Reject directories the catalog does not know.
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (ds.catalog.index_of(name) < 0)
      throw InputError("directory '" + name + "' is not in the catalog");
    dirs.push_back(name);
  }
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  for (std::int64_t cls = 0; cls < ds.catalog.size(); ++cls) {
    const fs::path dir = fs::path(root) / ds.catalog.at(cls).twi;
    if (!fs::is_directory(dir)) continue;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
        files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      try {
        RawImage raw = decode_image(file);
        LabeledImage img;
        img.height = raw.height;
        img.width = raw.width;
        img.channels = raw.channels;
        img.pixels = std::move(raw.pixels);
        img.label = cls;
        img.source_path = file;
        ds.images.push_back(std::move(img));
        rep.loaded += 1;
      } catch (const InputError&) {
        rep.skipped.push_back(file);
      }
    }
  }
  return ds;
}

// Stratified train/val/test assignment. Per class, targets come from
// largest-remainder rounding of ratio * count (so within-class error is
// at most one image), then a class with >= 3 images is guaranteed at
// least one image in every split with a nonzero ratio. Classes with fewer
// images than splits go wholly to train and are reported as warnings.
inline std::vector<std::string> split(Dataset& ds,
                                      double train_ratio = 0.60,
                                      double val_ratio = 0.20,
                                      double test_ratio = 0.20,
                                      std::uint64_t seed = 0) {
  const double total = train_ratio + val_ratio + test_ratio;
  if (std::abs(total - 1.0) > 1e-9)
    throw PreconditionError("split ratios must sum to 1");
  if (train_ratio < 0 || val_ratio < 0 || test_ratio < 0)
    throw PreconditionError("split ratios must be non-negative");
  ds.split_assignment.assign(ds.images.size(), Split::train);

  std::map<std::int64_t, std::vector<std::int64_t>> by_class;
  for (std::size_t i = 0; i < ds.images.size(); ++i)
    by_class[ds.images[i].label].push_back(static_cast<std::int64_t>(i));

  std::vector<std::string> warnings;
  const double ratios[3] = {train_ratio, val_ratio, test_ratio};
  for (auto& [cls, members] : by_class) {
    const std::int64_t n = static_cast<std::int64_t>(members.size());
    if (n < 3) {
      warnings.push_back("class " + std::to_string(cls) + " has only " +
                         std::to_string(n) +
                         " images; placing all of them in train");
      continue;
    }
    // largest-remainder apportionment of n over the three splits
    std::int64_t counts[3];
    double frac[3];
    std::int64_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      const double exact = ratios[s] * static_cast<double>(n);
      counts[s] = static_cast<std::int64_t>(exact);
      frac[s] = exact - static_cast<double>(counts[s]);
      assigned += counts[s];
    }
    while (assigned < n) {
      int best = 0;
      for (int s = 1; s < 3; ++s)
        if (frac[s] > frac[best]) best = s;
      counts[best] += 1;
      frac[best] = -1.0;
      assigned += 1;
    }
    // every nonzero-ratio split gets at least one image
    for (int s = 0; s < 3; ++s) {
      if (ratios[s] > 0 && counts[s] == 0) {
        int donor = 0;
        for (int d = 1; d < 3; ++d)
          if (counts[d] > counts[donor]) donor = d;
        counts[donor] -= 1;
        counts[s] += 1;
      }
    }
    Rng rng(adinkra::core::hash_combine(seed, static_cast<std::uint64_t>(cls)));
    rng.shuffle(members);
    std::int64_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (std::int64_t i = 0; i < counts[s]; ++i)
        ds.split_assignment[static_cast<std::size_t>(members[pos++])] =
            static_cast<Split>(s);
  }
  return warnings;
}

}  // namespace adinkra::data
