// Command-line driver: dataset synthesis, CNN training and evaluation,
// single-image prediction, feature extraction, classical-classifier
// grids, saliency panels, and an efficiency benchmark. Every successful
// run writes a manifest (key=value text) holding the fully resolved
// configuration; a manifest can be fed back through --config to replay
// the run.

#include <CLI11.hpp>

#include <chrono>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adinkra/cnn/checkpoint.hpp"
#include "adinkra/cnn/model.hpp"
#include "adinkra/cnn/train.hpp"
#include "adinkra/core/error.hpp"
#include "adinkra/core/sysinfo.hpp"
#include "adinkra/data/batches.hpp"
#include "adinkra/data/dataset.hpp"
#include "adinkra/data/image_io.hpp"
#include "adinkra/data/preprocess.hpp"
#include "adinkra/data/synth.hpp"
#include "adinkra/interpret/heatmap.hpp"
#include "adinkra/ml/features.hpp"
#include "adinkra/ml/grid.hpp"

namespace fs = std::filesystem;
using namespace adinkra;

namespace {

// ---------------------------------------------------------------------------
// small utilities
// ---------------------------------------------------------------------------

std::string iso_utc(std::chrono::system_clock::time_point tp) {
  const auto t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string render_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::int64_t parse_int_value(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("configuration key '" + key +
                     "' needs an integer, got '" + s + "'");
  }
}

std::uint64_t parse_uint_value(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size() || (!s.empty() && s[0] == '-'))
      throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("configuration key '" + key +
                     "' needs a non-negative integer, got '" + s + "'");
  }
}

double parse_double_value(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("configuration key '" + key + "' needs a number, got '" +
                     s + "'");
  }
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// ---------------------------------------------------------------------------
// configuration files and manifests
// ---------------------------------------------------------------------------

// Flat key=value text. A manifest is recognised by its `config.`-prefixed
// keys: those are stripped and used, and every unprefixed key (command,
// timestamps, artifacts, summary metrics) is ignored. In a plain file no
// key carries the prefix and all keys are taken as configuration.
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  bool is_manifest = false;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw UsageError("config file " + path + " line " +
                       std::to_string(line_no) + ": expected key=value");
    entries.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    if (entries.back().first.rfind("config.", 0) == 0) is_manifest = true;
  }
  std::map<std::string, std::string> out;
  for (auto& [key, value] : entries) {
    if (key.rfind("config.", 0) == 0)
      out[key.substr(7)] = value;
    else if (!is_manifest)
      out[key] = value;
  }
  return out;
}

// Ties each option to a config key: a key in the config file fills the
// option unless the flag was given on the command line (flags win), and
// the resolved value of every binding lands in the manifest.
class Bindings {
 public:
  void add(const std::string& key, CLI::Option* opt, std::string* target) {
    items_.push_back({key, opt, [target, key](const std::string& s) {
                        *target = s;
                      },
                      [target] { return *target; }});
  }
  void add(const std::string& key, CLI::Option* opt, std::int64_t* target) {
    items_.push_back({key, opt,
                      [target, key](const std::string& s) {
                        *target = parse_int_value(key, s);
                      },
                      [target] { return std::to_string(*target); }});
  }
  void add(const std::string& key, CLI::Option* opt, std::uint64_t* target) {
    items_.push_back({key, opt,
                      [target, key](const std::string& s) {
                        *target = parse_uint_value(key, s);
                      },
                      [target] { return std::to_string(*target); }});
  }
  void add(const std::string& key, CLI::Option* opt, double* target) {
    items_.push_back({key, opt,
                      [target, key](const std::string& s) {
                        *target = parse_double_value(key, s);
                      },
                      [target] { return render_double(*target); }});
  }

  void apply(const std::map<std::string, std::string>& config) const {
    for (const auto& [key, value] : config) {
      const Item* item = find(key);
      if (!item)
        throw UsageError("unknown configuration key: " + key);
      if (item->opt->count() == 0) item->set(value);
    }
  }

  std::vector<std::pair<std::string, std::string>> resolved() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& item : items_) out.emplace_back(item.key, item.get());
    return out;
  }

 private:
  struct Item {
    std::string key;
    CLI::Option* opt;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };
  const Item* find(const std::string& key) const {
    for (const auto& item : items_)
      if (item.key == key) return &item;
    return nullptr;
  }
  std::vector<Item> items_;
};

// Shared per-command state: the workdir, the optional config file, the
// bindings, and everything the manifest needs.
struct CommandContext {
  std::string command;
  const std::string* workdir = nullptr;
  std::string config_path;
  Bindings bindings;
  std::vector<std::string> artifacts;
  std::vector<std::pair<std::string, std::string>> summary;
  std::chrono::system_clock::time_point wall_start;
  std::chrono::steady_clock::time_point mono_start;

  void begin() {
    wall_start = std::chrono::system_clock::now();
    mono_start = std::chrono::steady_clock::now();
    if (!config_path.empty())
      bindings.apply(read_config_file(resolve(config_path)));
  }

  // workdir-relative resolution to an absolute, lexically normal path
  std::string resolve(const std::string& path) const {
    if (path.empty()) return path;
    fs::path p(path);
    if (!p.is_absolute()) p = fs::path(*workdir) / p;
    return fs::absolute(p).lexically_normal().string();
  }

  void note(const std::string& key, const std::string& value) {
    summary.emplace_back(key, value);
  }

  void write_manifest(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << "command=" << command << "\n";
    out << "start=" << iso_utc(wall_start) << "\n";
    out << "end=" << iso_utc(std::chrono::system_clock::now()) << "\n";
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      mono_start)
            .count();
    out << "seconds=" << render_double(seconds) << "\n";
    out << "peak_mem_bytes=" << core::peak_rss_bytes() << "\n";
    for (const auto& [key, value] : summary)
      out << key << "=" << value << "\n";
    for (const auto& artifact : artifacts)
      out << "artifact=" << artifact << "\n";
    for (const auto& [key, value] : bindings.resolved())
      out << "config." << key << "=" << value << "\n";
    if (!out) throw IoError("cannot write manifest: " + path);
  }
};

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory: " + dir);
}

// ---------------------------------------------------------------------------
// dataset plumbing shared by train/eval/features/bench
// ---------------------------------------------------------------------------

struct SplitOptions {
  double train_ratio = 0.60;
  double val_ratio = 0.20;
  double test_ratio = 0.20;
  std::uint64_t split_seed = 0;
};

void add_split_options(CLI::App* cmd, Bindings& bindings, SplitOptions& opts) {
  bindings.add("train_ratio",
               cmd->add_option("--train-ratio", opts.train_ratio,
                               "Fraction of each class assigned to train"),
               &opts.train_ratio);
  bindings.add("val_ratio",
               cmd->add_option("--val-ratio", opts.val_ratio,
                               "Fraction of each class assigned to val"),
               &opts.val_ratio);
  bindings.add("test_ratio",
               cmd->add_option("--test-ratio", opts.test_ratio,
                               "Fraction of each class assigned to test"),
               &opts.test_ratio);
  bindings.add("split_seed",
               cmd->add_option("--split-seed", opts.split_seed,
                               "Seed for the stratified split"),
               &opts.split_seed);
}

data::Dataset load_split_dataset(const std::string& root,
                                 const SplitOptions& opts) {
  data::LoadReport report;
  auto ds = data::load_directory(root, root + "/catalog.tsv", &report);
  for (const auto& skipped : report.skipped)
    std::cerr << "warning: skipped undecodable file " << skipped << "\n";
  if (ds.images.empty()) throw InputError("dataset is empty: " + root);
  const auto warnings = data::split(ds, opts.train_ratio, opts.val_ratio,
                                    opts.test_ratio, opts.split_seed);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return ds;
}

cnn::ModelSpec spec_by_name(const std::string& name, std::int64_t classes) {
  cnn::ModelSpec spec;
  if (name == "reduced")
    spec = cnn::reduced_spec();
  else if (name != "paper")
    throw UsageError("unknown spec '" + name + "' (want paper|reduced)");
  spec.num_classes = classes;
  spec.fc_widths.back() = classes;
  return spec;
}

void check_model_matches(const cnn::ModelSpec& spec,
                         const data::Dataset& ds) {
  if (spec.num_classes != ds.num_classes())
    throw InputError("checkpoint expects " +
                     std::to_string(spec.num_classes) +
                     " classes but the dataset catalog has " +
                     std::to_string(ds.num_classes()));
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOptions {
  std::int64_t classes = 62;
  std::int64_t per_class = 200;
  std::int64_t size = 64;
  std::uint64_t seed = 0;
  std::string out;
};

void run_synth(CommandContext& ctx, SynthOptions& opts) {
  ctx.begin();
  if (opts.classes < 1 || opts.classes > data::kSynthMaxClasses)
    throw UsageError("--classes must be in [1, " +
                     std::to_string(data::kSynthMaxClasses) + "], got " +
                     std::to_string(opts.classes));
  if (opts.per_class < 1) throw UsageError("--per-class must be >= 1");
  if (opts.size < 8) throw UsageError("--size must be >= 8");
  opts.out = ctx.resolve(opts.out);

  const auto ds = data::synth_generate(opts.classes, opts.per_class,
                                       opts.size, opts.seed);
  ensure_directory(opts.out);
  const auto files = data::materialize(ds, opts.out);

  std::cout << "wrote " << files << " images across " << opts.classes
            << " classes to " << opts.out << "\n";
  ctx.note("files", std::to_string(files));
  ctx.artifacts.push_back(opts.out);
  ctx.artifacts.push_back(opts.out + "/catalog.tsv");
  ctx.write_manifest(opts.out + "/manifest.txt");
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::string spec = "reduced";
  std::int64_t epochs = 50;
  double lr = 1e-4;
  std::int64_t batch = 32;
  std::int64_t batch_pred = 4;
  std::int64_t workers = 4;
  std::uint64_t seed = 0;
  SplitOptions split;
  std::string out;
};

void write_history_csv(const cnn::TrainHistory& history,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write history: " + path);
  out << "epoch,train_loss,train_acc,val_loss,val_acc,seconds,peak_mem\n";
  for (const auto& e : history.epochs)
    out << e.epoch << ',' << render_double(e.train_loss) << ','
        << render_double(e.train_acc) << ',' << render_double(e.val_loss)
        << ',' << render_double(e.val_acc) << ','
        << render_double(e.seconds) << ',' << e.peak_mem_bytes << "\n";
  if (!out) throw IoError("cannot write history: " + path);
}

void run_train(CommandContext& ctx, TrainOptions& opts) {
  ctx.begin();
  opts.data = ctx.resolve(opts.data);
  opts.out = ctx.resolve(opts.out);

  auto ds = load_split_dataset(opts.data, opts.split);
  auto spec = spec_by_name(opts.spec, ds.num_classes());
  auto model = cnn::build_model<float>(spec, opts.seed);

  cnn::TrainConfig cfg;
  cfg.epochs = opts.epochs;
  cfg.lr = opts.lr;
  cfg.batch_train = opts.batch;
  cfg.batch_pred = opts.batch_pred;
  cfg.workers = opts.workers;
  cfg.seed = opts.seed;

  ensure_directory(opts.out);
  const auto history = cnn::train<float>(
      model, ds, cfg, [](const cnn::EpochRecord& e) {
        std::printf(
            "epoch %" PRId64
            "  train_loss %.4f  train_acc %.4f  val_loss %.4f  val_acc "
            "%.4f  (%.1fs)\n",
            e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc,
            e.seconds);
        std::fflush(stdout);
      });

  const auto checkpoint_path = opts.out + "/model.adnk";
  const auto history_path = opts.out + "/history.csv";
  cnn::save_checkpoint(model, history, checkpoint_path);
  write_history_csv(history, history_path);

  std::cout << "best epoch " << history.best_epoch << " with val_acc "
            << render_double(history.best_val_acc) << "\n";
  ctx.note("classes", std::to_string(ds.num_classes()));
  ctx.note("best_epoch", std::to_string(history.best_epoch));
  ctx.note("best_val_acc", render_double(history.best_val_acc));
  ctx.artifacts.push_back(checkpoint_path);
  ctx.artifacts.push_back(history_path);
  ctx.write_manifest(opts.out + "/manifest.txt");
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOptions {
  std::string checkpoint;
  std::string data;
  std::string split_name = "test";
  std::int64_t batch = 4;
  std::int64_t workers = 4;
  SplitOptions split;
  std::string out;
};

void run_eval(CommandContext& ctx, EvalOptions& opts) {
  ctx.begin();
  opts.checkpoint = ctx.resolve(opts.checkpoint);
  opts.data = ctx.resolve(opts.data);
  opts.out = ctx.resolve(opts.out);

  auto [model, train_history] = cnn::load_checkpoint<float>(opts.checkpoint);
  auto ds = load_split_dataset(opts.data, opts.split);
  check_model_matches(model.spec, ds);

  const auto result = cnn::evaluate(model, ds,
                                    data::split_from_name(opts.split_name),
                                    opts.batch, opts.workers);

  ensure_directory(opts.out);
  const auto confusion_path = opts.out + "/confusion.csv";
  {
    std::ofstream out(confusion_path, std::ios::binary);
    if (!out) throw IoError("cannot write confusion matrix: " +
                            confusion_path);
    const auto c = result.num_classes;
    for (std::int64_t i = 0; i < c; ++i) {
      for (std::int64_t j = 0; j < c; ++j)
        out << result.confusion[i * c + j] << (j + 1 == c ? '\n' : ',');
    }
    if (!out) throw IoError("cannot write confusion matrix: " +
                            confusion_path);
  }

  std::printf("accuracy %.6f on split %s (mean loss %.6f)\n", result.accuracy,
              opts.split_name.c_str(), result.mean_loss);
  ctx.note("accuracy", render_double(result.accuracy));
  ctx.note("mean_loss", render_double(result.mean_loss));
  ctx.artifacts.push_back(confusion_path);
  ctx.write_manifest(opts.out + "/manifest.txt");
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictOptions {
  std::string checkpoint;
  std::string image;
  std::string catalog;
  std::string out = ".";
};

void run_predict(CommandContext& ctx, PredictOptions& opts) {
  ctx.begin();
  opts.checkpoint = ctx.resolve(opts.checkpoint);
  opts.image = ctx.resolve(opts.image);
  opts.catalog = ctx.resolve(opts.catalog);
  opts.out = ctx.resolve(opts.out);

  auto model = cnn::load_checkpoint<float>(opts.checkpoint).first;
  const auto catalog = data::LabelCatalog::load(opts.catalog);
  auto raw = data::decode_image(opts.image);
  data::LabeledImage li;
  li.height = raw.height;
  li.width = raw.width;
  li.channels = raw.channels;
  li.pixels = std::move(raw.pixels);
  li.source_path = opts.image;

  const auto prediction = cnn::predict(model, catalog, li);
  std::printf("%s\t%s\t%.4f\n", prediction.twi.c_str(),
              prediction.english.c_str(), prediction.confidence);

  ensure_directory(opts.out);
  ctx.note("class_index", std::to_string(prediction.index));
  ctx.note("prediction", prediction.twi);
  char conf[16];
  std::snprintf(conf, sizeof conf, "%.4f", prediction.confidence);
  ctx.note("confidence", conf);
  ctx.write_manifest(opts.out + "/manifest.txt");
}

// ---------------------------------------------------------------------------
// features
// ---------------------------------------------------------------------------

struct FeaturesOptions {
  std::string checkpoint;
  std::string data;
  std::string split_name = "test";
  std::string tap = "fc2";
  std::int64_t batch = 4;
  std::int64_t workers = 4;
  SplitOptions split;
  std::string out;
};

void run_features(CommandContext& ctx, FeaturesOptions& opts) {
  ctx.begin();
  opts.checkpoint = ctx.resolve(opts.checkpoint);
  opts.data = ctx.resolve(opts.data);
  opts.out = ctx.resolve(opts.out);

  auto model = cnn::load_checkpoint<float>(opts.checkpoint).first;
  auto ds = load_split_dataset(opts.data, opts.split);
  check_model_matches(model.spec, ds);

  data::BatchStream<float> stream(ds, data::split_from_name(opts.split_name),
                                  opts.batch, /*shuffle=*/false, 0,
                                  opts.workers, model.spec.input_size);
  if (stream.total_samples() == 0)
    throw UsageError("features: split '" + opts.split_name + "' is empty");

  ml::FeatureMatrix fm;
  data::Batch<float> batch;
  while (stream.next(batch)) {
    const auto feats = cnn::extract_features(model, batch.images, opts.tap);
    const auto n = feats->dim(0);
    const auto dim = feats->dim(1);
    if (fm.rows == 0) fm.dim = dim;
    fm.values.insert(fm.values.end(), feats->data(),
                     feats->data() + n * dim);
    fm.labels.insert(fm.labels.end(), batch.labels.begin(),
                     batch.labels.end());
    fm.rows += n;
  }

  ensure_directory(opts.out);
  const auto features_path = opts.out + "/features.adnf";
  ml::save_features(fm, features_path);

  std::cout << "wrote " << fm.rows << " rows of dim " << fm.dim << " to "
            << features_path << "\n";
  ctx.note("rows", std::to_string(fm.rows));
  ctx.note("dim", std::to_string(fm.dim));
  ctx.artifacts.push_back(features_path);
  ctx.write_manifest(opts.out + "/manifest.txt");
}

// ---------------------------------------------------------------------------
// classical
// ---------------------------------------------------------------------------

struct ClassicalOptions {
  std::string features;
  std::string test_features;
  std::string grid = "paper";
  std::int64_t runs = 5;
  std::uint64_t seed = 0;
  std::string out;
};

void run_classical(CommandContext& ctx, ClassicalOptions& opts) {
  ctx.begin();
  opts.features = ctx.resolve(opts.features);
  opts.test_features = ctx.resolve(opts.test_features);
  opts.out = ctx.resolve(opts.out);

  const auto train_fm = ml::load_features(opts.features);
  const auto test_fm = ml::load_features(opts.test_features);

  std::vector<ml::GridConfig> grid;
  if (opts.grid == "paper")
    grid = ml::paper_grid();
  else if (opts.grid == "desk")
    grid = ml::desk_grid();
  else
    grid = ml::parse_grid_file(ctx.resolve(opts.grid));

  const auto report = ml::run_grid(train_fm, test_fm, grid, opts.seed,
                                   opts.runs, -1, &std::cout);
  for (const auto& failure : report.failures)
    std::cerr << "failed: " << failure << "\n";

  ensure_directory(opts.out);
  const auto runs_path = opts.out + "/grid_runs.csv";
  const auto means_path = opts.out + "/grid_means.csv";
  ml::write_grid_csv(report, runs_path, means_path);

  for (const auto& mean : report.means) {
    char acc[16];
    std::snprintf(acc, sizeof acc, "%.6f", mean.mean_accuracy);
    std::cout << mean.family << "  " << mean.params << "  " << acc << "\n";
  }

  ctx.note("result_rows", std::to_string(report.rows.size()));
  ctx.note("failures", std::to_string(report.failures.size()));
  ctx.artifacts.push_back(runs_path);
  ctx.artifacts.push_back(means_path);
  ctx.write_manifest(opts.out + "/manifest.txt");
}

// ---------------------------------------------------------------------------
// heatmap
// ---------------------------------------------------------------------------

struct HeatmapOptions {
  std::string checkpoint;
  std::string image;
  std::string layer = "conv6,relu6,pool3";
  double alpha = 0.4;
  std::string out;
};

void run_heatmap(CommandContext& ctx, HeatmapOptions& opts) {
  ctx.begin();
  opts.checkpoint = ctx.resolve(opts.checkpoint);
  opts.image = ctx.resolve(opts.image);
  opts.out = ctx.resolve(opts.out);
  if (!(opts.alpha >= 0.0 && opts.alpha <= 1.0))
    throw UsageError("--alpha must be in [0,1]");
  const auto tags = split_csv_list(opts.layer);
  if (tags.empty()) throw UsageError("--layer needs at least one tag");

  auto model = cnn::load_checkpoint<float>(opts.checkpoint).first;
  auto raw = data::decode_image(opts.image);
  data::LabeledImage li;
  li.height = raw.height;
  li.width = raw.width;
  li.channels = raw.channels;
  li.pixels = std::move(raw.pixels);
  li.source_path = opts.image;

  const auto size = model.spec.input_size;
  auto x = core::make_tensor<float>({1, 3, size, size});
  data::preprocess_into(li, size, x->data());

  const auto captures = interpret::capture(model, x, tags);
  ensure_directory(opts.out);
  for (const auto& cap : captures) {
    const auto hm = interpret::heatmap(cap, size);
    const auto blended = interpret::overlay(li, hm, opts.alpha);
    const auto path = opts.out + "/panel_" + cap.tag + ".png";
    interpret::render_panel(li, hm, blended, cap.tag, path);
    std::cout << "wrote " << path << "\n";
    ctx.artifacts.push_back(path);
  }
  ctx.write_manifest(opts.out + "/manifest.txt");
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchOptions {
  std::string checkpoint;
  std::string data;
  std::string split_name = "test";
  std::int64_t batch = 4;
  SplitOptions split;
  std::string out;
};

void run_bench(CommandContext& ctx, BenchOptions& opts) {
  ctx.begin();
  opts.checkpoint = ctx.resolve(opts.checkpoint);
  opts.data = ctx.resolve(opts.data);
  opts.out = ctx.resolve(opts.out);

  auto model = cnn::load_checkpoint<float>(opts.checkpoint).first;
  auto ds = load_split_dataset(opts.data, opts.split);
  check_model_matches(model.spec, ds);

  const auto t0 = std::chrono::steady_clock::now();
  const auto result = cnn::evaluate(model, ds,
                                    data::split_from_name(opts.split_name),
                                    opts.batch, /*workers=*/1);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  std::printf("workload seconds %.3f  peak_mem_bytes %" PRId64
              "  accuracy %.6f\n",
              seconds, core::peak_rss_bytes(), result.accuracy);
  ctx.note("workload_seconds", render_double(seconds));
  ctx.note("accuracy", render_double(result.accuracy));
  ensure_directory(opts.out);
  ctx.write_manifest(opts.out + "/manifest.txt");
}

}  // namespace

// ---------------------------------------------------------------------------
// wiring
// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{
      "adinkra: symbol-classification toolkit (synthesis, CNN training, "
      "classical classifiers, saliency)"};
  app.require_subcommand(1);
  std::string workdir = ".";
  app.add_option("--workdir", workdir,
                 "Directory that relative paths resolve against")
      ->capture_default_str();

  auto make_context = [&](CLI::App* cmd, const std::string& name) {
    auto ctx = std::make_shared<CommandContext>();
    ctx->command = name;
    ctx->workdir = &workdir;
    cmd->add_option("--config", ctx->config_path,
                    "key=value config file (or a manifest) supplying "
                    "defaults for flags not given");
    return ctx;
  };

  // synth ------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth",
                                   "Generate the synthetic symbol corpus");
  auto synth_ctx = make_context(synth, "synth");
  auto synth_opts = std::make_shared<SynthOptions>();
  synth_ctx->bindings.add(
      "classes",
      synth->add_option("--classes", synth_opts->classes, "Number of classes")
          ->capture_default_str(),
      &synth_opts->classes);
  synth_ctx->bindings.add(
      "per_class",
      synth->add_option("--per-class", synth_opts->per_class,
                        "Images per class")
          ->capture_default_str(),
      &synth_opts->per_class);
  synth_ctx->bindings.add(
      "size",
      synth->add_option("--size", synth_opts->size, "Image side in pixels")
          ->capture_default_str(),
      &synth_opts->size);
  synth_ctx->bindings.add(
      "seed",
      synth->add_option("--seed", synth_opts->seed, "Generator seed")
          ->capture_default_str(),
      &synth_opts->seed);
  synth_ctx->bindings.add(
      "out", synth->add_option("--out", synth_opts->out, "Output directory"),
      &synth_opts->out);
  synth->callback([synth_ctx, synth_opts] {
    if (synth_opts->out.empty()) throw UsageError("synth: --out is required");
    run_synth(*synth_ctx, *synth_opts);
  });

  // train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train the CNN on a dataset");
  auto train_ctx = make_context(train, "train");
  auto train_opts = std::make_shared<TrainOptions>();
  train_ctx->bindings.add(
      "data", train->add_option("--data", train_opts->data, "Dataset root"),
      &train_opts->data);
  train_ctx->bindings.add(
      "spec",
      train->add_option("--spec", train_opts->spec,
                        "Architecture: paper or reduced")
          ->capture_default_str(),
      &train_opts->spec);
  train_ctx->bindings.add(
      "epochs",
      train->add_option("--epochs", train_opts->epochs, "Training epochs")
          ->capture_default_str(),
      &train_opts->epochs);
  train_ctx->bindings.add(
      "lr",
      train->add_option("--lr", train_opts->lr, "Adam learning rate")
          ->capture_default_str(),
      &train_opts->lr);
  train_ctx->bindings.add(
      "batch",
      train->add_option("--batch", train_opts->batch, "Training batch size")
          ->capture_default_str(),
      &train_opts->batch);
  train_ctx->bindings.add(
      "batch_pred",
      train->add_option("--batch-pred", train_opts->batch_pred,
                        "Validation batch size")
          ->capture_default_str(),
      &train_opts->batch_pred);
  train_ctx->bindings.add(
      "workers",
      train->add_option("--workers", train_opts->workers,
                        "Preprocessing worker threads")
          ->capture_default_str(),
      &train_opts->workers);
  train_ctx->bindings.add(
      "seed",
      train->add_option("--seed", train_opts->seed,
                        "Seed for init, shuffling and dropout")
          ->capture_default_str(),
      &train_opts->seed);
  add_split_options(train, train_ctx->bindings, train_opts->split);
  train_ctx->bindings.add(
      "out", train->add_option("--out", train_opts->out, "Output directory"),
      &train_opts->out);
  train->callback([train_ctx, train_opts] {
    if (train_opts->data.empty()) throw UsageError("train: --data is required");
    if (train_opts->out.empty()) throw UsageError("train: --out is required");
    run_train(*train_ctx, *train_opts);
  });

  // eval -------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval",
                                  "Evaluate a checkpoint on a dataset split");
  auto eval_ctx = make_context(eval, "eval");
  auto eval_opts = std::make_shared<EvalOptions>();
  eval_ctx->bindings.add(
      "checkpoint",
      eval->add_option("--checkpoint", eval_opts->checkpoint,
                       "Checkpoint file"),
      &eval_opts->checkpoint);
  eval_ctx->bindings.add(
      "data", eval->add_option("--data", eval_opts->data, "Dataset root"),
      &eval_opts->data);
  eval_ctx->bindings.add(
      "split",
      eval->add_option("--split", eval_opts->split_name,
                       "Which split to score: train|val|test")
          ->capture_default_str(),
      &eval_opts->split_name);
  eval_ctx->bindings.add(
      "batch",
      eval->add_option("--batch", eval_opts->batch, "Prediction batch size")
          ->capture_default_str(),
      &eval_opts->batch);
  eval_ctx->bindings.add(
      "workers",
      eval->add_option("--workers", eval_opts->workers,
                       "Preprocessing worker threads")
          ->capture_default_str(),
      &eval_opts->workers);
  add_split_options(eval, eval_ctx->bindings, eval_opts->split);
  eval_ctx->bindings.add(
      "out", eval->add_option("--out", eval_opts->out, "Output directory"),
      &eval_opts->out);
  eval->callback([eval_ctx, eval_opts] {
    if (eval_opts->checkpoint.empty())
      throw UsageError("eval: --checkpoint is required");
    if (eval_opts->data.empty()) throw UsageError("eval: --data is required");
    if (eval_opts->out.empty()) throw UsageError("eval: --out is required");
    run_eval(*eval_ctx, *eval_opts);
  });

  // predict ----------------------------------------------------------------
  auto* predict = app.add_subcommand("predict",
                                     "Classify one image and print "
                                     "name, meaning and confidence");
  auto predict_ctx = make_context(predict, "predict");
  auto predict_opts = std::make_shared<PredictOptions>();
  predict_ctx->bindings.add(
      "checkpoint",
      predict->add_option("--checkpoint", predict_opts->checkpoint,
                          "Checkpoint file"),
      &predict_opts->checkpoint);
  predict_ctx->bindings.add(
      "image",
      predict->add_option("--image", predict_opts->image, "Image to classify"),
      &predict_opts->image);
  predict_ctx->bindings.add(
      "catalog",
      predict->add_option("--catalog", predict_opts->catalog,
                          "Class catalog file"),
      &predict_opts->catalog);
  predict_ctx->bindings.add(
      "out",
      predict->add_option("--out", predict_opts->out,
                          "Directory for the run manifest")
          ->capture_default_str(),
      &predict_opts->out);
  predict->callback([predict_ctx, predict_opts] {
    if (predict_opts->checkpoint.empty())
      throw UsageError("predict: --checkpoint is required");
    if (predict_opts->image.empty())
      throw UsageError("predict: --image is required");
    if (predict_opts->catalog.empty())
      throw UsageError("predict: --catalog is required");
    run_predict(*predict_ctx, *predict_opts);
  });

  // features ---------------------------------------------------------------
  auto* features = app.add_subcommand(
      "features", "Extract a feature matrix from a dataset split");
  auto features_ctx = make_context(features, "features");
  auto features_opts = std::make_shared<FeaturesOptions>();
  features_ctx->bindings.add(
      "checkpoint",
      features->add_option("--checkpoint", features_opts->checkpoint,
                           "Checkpoint file"),
      &features_opts->checkpoint);
  features_ctx->bindings.add(
      "data",
      features->add_option("--data", features_opts->data, "Dataset root"),
      &features_opts->data);
  features_ctx->bindings.add(
      "split",
      features->add_option("--split", features_opts->split_name,
                           "Which split to extract: train|val|test")
          ->capture_default_str(),
      &features_opts->split_name);
  features_ctx->bindings.add(
      "tap",
      features->add_option("--tap", features_opts->tap,
                           "Feature tap: flatten|fc1|fc2")
          ->capture_default_str(),
      &features_opts->tap);
  features_ctx->bindings.add(
      "batch",
      features->add_option("--batch", features_opts->batch,
                           "Prediction batch size")
          ->capture_default_str(),
      &features_opts->batch);
  features_ctx->bindings.add(
      "workers",
      features->add_option("--workers", features_opts->workers,
                           "Preprocessing worker threads")
          ->capture_default_str(),
      &features_opts->workers);
  add_split_options(features, features_ctx->bindings, features_opts->split);
  features_ctx->bindings.add(
      "out",
      features->add_option("--out", features_opts->out, "Output directory"),
      &features_opts->out);
  features->callback([features_ctx, features_opts] {
    if (features_opts->checkpoint.empty())
      throw UsageError("features: --checkpoint is required");
    if (features_opts->data.empty())
      throw UsageError("features: --data is required");
    if (features_opts->out.empty())
      throw UsageError("features: --out is required");
    run_features(*features_ctx, *features_opts);
  });

  // classical --------------------------------------------------------------
  auto* classical = app.add_subcommand(
      "classical", "Run the classical-classifier grid on feature files");
  auto classical_ctx = make_context(classical, "classical");
  auto classical_opts = std::make_shared<ClassicalOptions>();
  classical_ctx->bindings.add(
      "features",
      classical->add_option("--features", classical_opts->features,
                            "Training feature file"),
      &classical_opts->features);
  classical_ctx->bindings.add(
      "test_features",
      classical->add_option("--test-features", classical_opts->test_features,
                            "Test feature file"),
      &classical_opts->test_features);
  classical_ctx->bindings.add(
      "grid",
      classical->add_option("--grid", classical_opts->grid,
                            "paper, desk, or a grid file path")
          ->capture_default_str(),
      &classical_opts->grid);
  classical_ctx->bindings.add(
      "runs",
      classical->add_option("--runs", classical_opts->runs,
                            "Shuffled repetitions per configuration")
          ->capture_default_str(),
      &classical_opts->runs);
  classical_ctx->bindings.add(
      "seed",
      classical->add_option("--seed", classical_opts->seed,
                            "Base seed for shuffles and learners")
          ->capture_default_str(),
      &classical_opts->seed);
  classical_ctx->bindings.add(
      "out",
      classical->add_option("--out", classical_opts->out, "Output directory"),
      &classical_opts->out);
  classical->callback([classical_ctx, classical_opts] {
    if (classical_opts->features.empty())
      throw UsageError("classical: --features is required");
    if (classical_opts->test_features.empty())
      throw UsageError("classical: --test-features is required");
    if (classical_opts->out.empty())
      throw UsageError("classical: --out is required");
    run_classical(*classical_ctx, *classical_opts);
  });

  // heatmap ----------------------------------------------------------------
  auto* heatmap = app.add_subcommand(
      "heatmap", "Render saliency panels for an image at chosen layers");
  auto heatmap_ctx = make_context(heatmap, "heatmap");
  auto heatmap_opts = std::make_shared<HeatmapOptions>();
  heatmap_ctx->bindings.add(
      "checkpoint",
      heatmap->add_option("--checkpoint", heatmap_opts->checkpoint,
                          "Checkpoint file"),
      &heatmap_opts->checkpoint);
  heatmap_ctx->bindings.add(
      "image",
      heatmap->add_option("--image", heatmap_opts->image, "Input image"),
      &heatmap_opts->image);
  heatmap_ctx->bindings.add(
      "layer",
      heatmap->add_option("--layer", heatmap_opts->layer,
                          "Comma-separated layer tags")
          ->capture_default_str(),
      &heatmap_opts->layer);
  heatmap_ctx->bindings.add(
      "alpha",
      heatmap->add_option("--alpha", heatmap_opts->alpha,
                          "Overlay blend weight in [0,1]")
          ->capture_default_str(),
      &heatmap_opts->alpha);
  heatmap_ctx->bindings.add(
      "out",
      heatmap->add_option("--out", heatmap_opts->out, "Output directory"),
      &heatmap_opts->out);
  heatmap->callback([heatmap_ctx, heatmap_opts] {
    if (heatmap_opts->checkpoint.empty())
      throw UsageError("heatmap: --checkpoint is required");
    if (heatmap_opts->image.empty())
      throw UsageError("heatmap: --image is required");
    if (heatmap_opts->out.empty())
      throw UsageError("heatmap: --out is required");
    run_heatmap(*heatmap_ctx, *heatmap_opts);
  });

  // bench ------------------------------------------------------------------
  auto* bench = app.add_subcommand(
      "bench", "Time a fixed inference workload and record peak memory");
  auto bench_ctx = make_context(bench, "bench");
  auto bench_opts = std::make_shared<BenchOptions>();
  bench_ctx->bindings.add(
      "checkpoint",
      bench->add_option("--checkpoint", bench_opts->checkpoint,
                        "Checkpoint file"),
      &bench_opts->checkpoint);
  bench_ctx->bindings.add(
      "data", bench->add_option("--data", bench_opts->data, "Dataset root"),
      &bench_opts->data);
  bench_ctx->bindings.add(
      "split",
      bench->add_option("--split", bench_opts->split_name,
                        "Which split to run: train|val|test")
          ->capture_default_str(),
      &bench_opts->split_name);
  bench_ctx->bindings.add(
      "batch",
      bench->add_option("--batch", bench_opts->batch,
                        "Prediction batch size")
          ->capture_default_str(),
      &bench_opts->batch);
  add_split_options(bench, bench_ctx->bindings, bench_opts->split);
  bench_ctx->bindings.add(
      "out", bench->add_option("--out", bench_opts->out, "Output directory"),
      &bench_opts->out);
  bench->callback([bench_ctx, bench_opts] {
    if (bench_opts->checkpoint.empty())
      throw UsageError("bench: --checkpoint is required");
    if (bench_opts->data.empty()) throw UsageError("bench: --data is required");
    if (bench_opts->out.empty()) throw UsageError("bench: --out is required");
    run_bench(*bench_ctx, *bench_opts);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
