#include "adinkra/ml/grid.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "adinkra/core/rng.hpp"
#include "adinkra/ml/boost.hpp"
#include "adinkra/ml/forest.hpp"
#include "adinkra/ml/knn.hpp"
#include "adinkra/ml/linear_svc.hpp"
#include "adinkra/ml/mlp.hpp"
#include "adinkra/ml/tree.hpp"

namespace adinkra::ml {

std::string params_string(const GridConfig& config) {
  if (config.params.empty()) return "default";
  std::string out;
  for (const auto& [key, value] : config.params) {
    if (!out.empty()) out += ';';
    out += key + "=" + value;
  }
  return out;
}

namespace {

GridConfig mk(std::string family,
              std::vector<std::pair<std::string, std::string>> params = {}) {
  return GridConfig{std::move(family), std::move(params)};
}

// Parsed key/value view that rejects unrecognised keys.
class Params {
 public:
  explicit Params(const GridConfig& config) : config_(config) {
    for (const auto& [key, value] : config.params) {
      if (!map_.emplace(key, value).second)
        throw ConfigError("duplicate parameter '" + key + "'");
    }
  }

  std::string get(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    const auto it = map_.find(key);
    return it == map_.end() ? fallback : it->second;
  }

  void finish() const {
    for (const auto& [key, value] : map_)
      if (!seen_.count(key))
        throw ConfigError("unknown parameter '" + key + "' for family '" +
                          config_.family + "'");
  }

 private:
  const GridConfig& config_;
  std::map<std::string, std::string> map_;
  std::set<std::string> seen_;
};

std::int64_t to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto parsed = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("parameter " + key + "=" + value +
                      " is not an integer");
  }
}

double to_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("parameter " + key + "=" + value + " is not a number");
  }
}

std::int64_t to_depth(const std::string& key, const std::string& value) {
  if (value == "None") return -1;
  const auto depth = to_int(key, value);
  if (depth < 1)
    throw ConfigError("parameter " + key + "=" + value + " must be >= 1");
  return depth;
}

std::vector<std::int64_t> to_widths(const std::string& value) {
  std::vector<std::int64_t> widths;
  std::string token;
  std::stringstream stream(value);
  while (std::getline(stream, token, 'x'))
    widths.push_back(to_int("hidden_layer_sizes", token));
  if (widths.empty())
    throw ConfigError("hidden_layer_sizes=" + value + " lists no widths");
  return widths;
}

// Runs one configuration once; `rs` seeds the run's shuffle and any
// stochastic trainer.
std::vector<std::int64_t> run_config(const GridConfig& config,
                                     const FeatureMatrix& train,
                                     const FeatureMatrix& test,
                                     std::int64_t num_classes,
                                     std::uint64_t rs) {
  Params params(config);
  std::vector<std::int64_t> preds;
  if (config.family == "knn") {
    const auto k = to_int("n_neighbors", params.get("n_neighbors", "5"));
    const auto weights_name = params.get("weights", "uniform");
    if (weights_name != "uniform" && weights_name != "distance")
      throw ConfigError("weights=" + weights_name + " is not supported");
    const auto weights = weights_name == "uniform" ? KnnWeights::uniform
                                                   : KnnWeights::distance;
    const auto p = to_int("p", params.get("p", "2"));
    params.finish();
    const auto scaler = Standardizer::fit(train);
    preds = knn_classify(scaler.transform(train), scaler.transform(test), k,
                         weights, static_cast<int>(p));
  } else if (config.family == "linear_svc") {
    const auto loss_name = params.get("loss", "squared_hinge");
    if (loss_name != "hinge" && loss_name != "squared_hinge")
      throw ConfigError("loss=" + loss_name + " is not supported");
    const auto penalty = params.get("penalty", "l2");
    if (penalty != "l2")
      throw ConfigError("penalty=" + penalty + " is not supported");
    const auto C = to_real("C", params.get("C", "1.0"));
    const auto max_iter = to_int("max_iter", params.get("max_iter", "1000"));
    params.finish();
    const auto scaler = Standardizer::fit(train);
    const auto model = linear_svc_train(
        scaler.transform(train),
        loss_name == "hinge" ? SvcLoss::hinge : SvcLoss::squared_hinge, C,
        max_iter, num_classes);
    preds = model.predict(scaler.transform(test));
  } else if (config.family == "decision_tree") {
    const auto criterion = parse_criterion(params.get("criterion", "gini"));
    const auto depth = to_depth("max_depth", params.get("max_depth", "None"));
    const auto splitter = params.get("splitter", "best");
    if (splitter != "best")
      throw ConfigError("splitter=" + splitter + " is not supported");
    params.finish();
    preds = decision_tree_train(train, criterion, depth, num_classes)
                .predict(test);
  } else if (config.family == "random_forest") {
    const auto n_estimators =
        to_int("n_estimators", params.get("n_estimators", "100"));
    const auto criterion = parse_criterion(params.get("criterion", "gini"));
    const auto depth = to_depth("max_depth", params.get("max_depth", "None"));
    params.finish();
    preds = random_forest_train(train, n_estimators, criterion, depth,
                                core::hash_combine(rs, 1), num_classes)
                .predict(test);
  } else if (config.family == "gradient_boost") {
    const auto n_estimators =
        to_int("n_estimators", params.get("n_estimators", "100"));
    const auto depth = to_int("max_depth", params.get("max_depth", "6"));
    const auto objective_name =
        params.get("objective", "multi:softprob");
    BoostObjective objective;
    if (objective_name == "multi:softmax")
      objective = BoostObjective::multi_softmax;
    else if (objective_name == "multi:softprob")
      objective = BoostObjective::multi_softprob;
    else
      throw ConfigError("objective=" + objective_name + " is not supported");
    params.finish();
    preds = gradient_boost_train(train, n_estimators, depth, objective, 0.3,
                                 num_classes)
                .predict(test);
  } else if (config.family == "mlp") {
    const auto widths = to_widths(params.get("hidden_layer_sizes", "100"));
    const auto activation =
        parse_mlp_activation(params.get("activation", "relu"));
    const auto max_iter = to_int("max_iter", params.get("max_iter", "200"));
    params.finish();
    const auto scaler = Standardizer::fit(train);
    const auto model =
        mlp_train(scaler.transform(train), widths, activation, max_iter, 1e-3,
                  200, core::hash_combine(rs, 1), num_classes);
    preds = model.predict(scaler.transform(test));
  } else {
    throw ConfigError("unknown classifier family '" + config.family + "'");
  }
  return preds;
}

std::string format_accuracy(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

}  // namespace

std::vector<GridConfig> paper_grid() {
  std::vector<GridConfig> grid;
  grid.push_back(mk("knn"));
  grid.push_back(mk("knn", {{"n_neighbors", "5"}, {"weights", "uniform"}, {"p", "1"}}));
  grid.push_back(mk("knn", {{"n_neighbors", "10"}, {"weights", "distance"}, {"p", "2"}}));
  grid.push_back(mk("knn", {{"n_neighbors", "5"}, {"weights", "distance"}, {"p", "2"}}));

  grid.push_back(mk("linear_svc"));
  grid.push_back(mk("linear_svc", {{"loss", "squared_hinge"}, {"C", "1.0"}, {"penalty", "l2"}, {"max_iter", "500"}}));
  grid.push_back(mk("linear_svc", {{"loss", "squared_hinge"}, {"C", "1.0"}, {"penalty", "l2"}, {"max_iter", "100"}}));
  grid.push_back(mk("linear_svc", {{"loss", "hinge"}, {"C", "1.0"}, {"penalty", "l2"}, {"max_iter", "1000"}}));
  grid.push_back(mk("linear_svc", {{"loss", "hinge"}, {"C", "1.0"}, {"penalty", "l2"}, {"max_iter", "500"}}));
  grid.push_back(mk("linear_svc", {{"loss", "hinge"}, {"C", "1.0"}, {"penalty", "l2"}, {"max_iter", "100"}}));

  grid.push_back(mk("random_forest"));
  grid.push_back(mk("random_forest", {{"n_estimators", "750"}, {"criterion", "gini"}, {"max_depth", "50"}}));
  grid.push_back(mk("random_forest", {{"n_estimators", "1000"}, {"criterion", "gini"}, {"max_depth", "100"}}));
  grid.push_back(mk("random_forest", {{"n_estimators", "100"}, {"criterion", "entropy"}, {"max_depth", "None"}}));
  grid.push_back(mk("random_forest", {{"n_estimators", "750"}, {"criterion", "entropy"}, {"max_depth", "50"}}));
  grid.push_back(mk("random_forest", {{"n_estimators", "1000"}, {"criterion", "entropy"}, {"max_depth", "100"}}));
  grid.push_back(mk("random_forest", {{"n_estimators", "100"}, {"criterion", "log_loss"}, {"max_depth", "None"}}));
  grid.push_back(mk("random_forest", {{"n_estimators", "750"}, {"criterion", "log_loss"}, {"max_depth", "50"}}));
  grid.push_back(mk("random_forest", {{"n_estimators", "1000"}, {"criterion", "log_loss"}, {"max_depth", "100"}}));

  grid.push_back(mk("decision_tree"));
  grid.push_back(mk("decision_tree", {{"criterion", "entropy"}, {"max_depth", "10"}, {"splitter", "best"}}));
  grid.push_back(mk("decision_tree", {{"criterion", "entropy"}, {"max_depth", "50"}, {"splitter", "best"}}));

  grid.push_back(mk("gradient_boost"));
  grid.push_back(mk("gradient_boost", {{"n_estimators", "300"}, {"max_depth", "6"}, {"objective", "multi:softmax"}}));
  grid.push_back(mk("gradient_boost", {{"n_estimators", "300"}, {"max_depth", "12"}, {"objective", "multi:softmax"}}));
  grid.push_back(mk("gradient_boost", {{"n_estimators", "100"}, {"max_depth", "6"}, {"objective", "multi:softprob"}}));
  grid.push_back(mk("gradient_boost", {{"n_estimators", "300"}, {"max_depth", "6"}, {"objective", "multi:softprob"}}));
  grid.push_back(mk("gradient_boost", {{"n_estimators", "100"}, {"max_depth", "12"}, {"objective", "multi:softprob"}}));
  grid.push_back(mk("gradient_boost", {{"n_estimators", "300"}, {"max_depth", "12"}, {"objective", "multi:softprob"}}));

  grid.push_back(mk("mlp"));
  grid.push_back(mk("mlp", {{"hidden_layer_sizes", "128"}, {"activation", "relu"}, {"max_iter", "200"}}));
  grid.push_back(mk("mlp", {{"hidden_layer_sizes", "256"}, {"activation", "relu"}, {"max_iter", "200"}}));
  grid.push_back(mk("mlp", {{"hidden_layer_sizes", "512"}, {"activation", "relu"}, {"max_iter", "200"}}));
  grid.push_back(mk("mlp", {{"hidden_layer_sizes", "100"}, {"activation", "tanh"}, {"max_iter", "200"}}));
  grid.push_back(mk("mlp", {{"hidden_layer_sizes", "128"}, {"activation", "tanh"}, {"max_iter", "200"}}));
  grid.push_back(mk("mlp", {{"hidden_layer_sizes", "256"}, {"activation", "tanh"}, {"max_iter", "200"}}));
  grid.push_back(mk("mlp", {{"hidden_layer_sizes", "512"}, {"activation", "tanh"}, {"max_iter", "200"}}));
  return grid;
}

std::vector<GridConfig> desk_grid() {
  std::vector<GridConfig> grid;
  grid.push_back(mk("knn"));
  grid.push_back(mk("linear_svc", {{"loss", "hinge"}, {"C", "1.0"}, {"penalty", "l2"}, {"max_iter", "30"}}));
  grid.push_back(mk("decision_tree", {{"criterion", "entropy"}, {"max_depth", "10"}, {"splitter", "best"}}));
  grid.push_back(mk("random_forest", {{"n_estimators", "25"}, {"criterion", "gini"}, {"max_depth", "25"}}));
  grid.push_back(mk("gradient_boost", {{"n_estimators", "5"}, {"max_depth", "3"}, {"objective", "multi:softprob"}}));
  grid.push_back(mk("mlp", {{"hidden_layer_sizes", "256"}, {"activation", "relu"}, {"max_iter", "40"}}));
  return grid;
}

GridReport run_grid(const FeatureMatrix& train, const FeatureMatrix& test,
                    const std::vector<GridConfig>& grid, std::uint64_t seed,
                    int runs, std::int64_t num_classes,
                    std::ostream* progress) {
  validate(train, num_classes);
  validate(test, num_classes);
  if (train.labels.empty() || test.labels.empty())
    throw PreconditionError("run_grid: labelled train and test splits required");
  if (train.dim != test.dim)
    throw PreconditionError("run_grid: train dimension " +
                            std::to_string(train.dim) + " != test dimension " +
                            std::to_string(test.dim));
  if (runs < 1) throw PreconditionError("run_grid: runs must be >= 1");
  if (num_classes < 0)
    num_classes = std::max(infer_num_classes(train), infer_num_classes(test));

  GridReport report;
  std::vector<std::int64_t> order(static_cast<std::size_t>(train.rows));
  for (std::size_t ci = 0; ci < grid.size(); ++ci) {
    const auto& config = grid[ci];
    const auto label = config.family + " " + params_string(config);
    double total = 0.0;
    int completed = 0;
    for (int run = 0; run < runs; ++run) {
      const auto rs = core::hash_combine(seed, ci, static_cast<std::uint64_t>(run));
      try {
        std::iota(order.begin(), order.end(), 0);
        core::Rng rng(rs);
        rng.shuffle(order);
        const auto shuffled = reorder(train, order);
        const auto preds = run_config(config, shuffled, test, num_classes, rs);
        const auto acc = accuracy(preds, test.labels);
        report.rows.push_back({config.family, params_string(config), run, acc});
        total += acc;
        ++completed;
      } catch (const std::exception& e) {
        report.failures.push_back(label + ": " + e.what());
        break;  // a config that cannot run once will not run again
      }
    }
    if (completed > 0) {
      const double mean = total / completed;
      report.means.push_back({config.family, params_string(config), mean});
      if (progress)
        (*progress) << label << ": mean accuracy "
                    << format_accuracy(mean) << " over " << completed
                    << " runs\n";
    } else if (progress) {
      (*progress) << label << ": failed\n";
    }
  }
  return report;
}

void write_grid_csv(const GridReport& report, const std::string& runs_path,
                    const std::string& means_path) {
  std::ofstream runs(runs_path, std::ios::trunc);
  if (!runs) throw IoError("cannot write " + runs_path);
  runs << "family,params,run,accuracy\n";
  for (const auto& row : report.rows)
    runs << row.family << ',' << row.params << ',' << row.run << ','
         << format_accuracy(row.accuracy) << '\n';
  if (!runs.flush()) throw IoError("cannot write " + runs_path);

  std::ofstream means(means_path, std::ios::trunc);
  if (!means) throw IoError("cannot write " + means_path);
  means << "family,params,mean_accuracy\n";
  for (const auto& entry : report.means)
    means << entry.family << ',' << entry.params << ','
          << format_accuracy(entry.mean_accuracy) << '\n';
  if (!means.flush()) throw IoError("cannot write " + means_path);
}

std::vector<GridConfig> parse_grid_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw InputError("cannot open grid file " + path);
  static const std::set<std::string> families = {
      "knn",           "linear_svc",     "decision_tree",
      "random_forest", "gradient_boost", "mlp"};
  std::vector<GridConfig> grid;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::stringstream stream(line);
    GridConfig config;
    std::string rest;
    stream >> config.family;
    std::getline(stream, rest);
    if (!families.count(config.family))
      throw InputError("grid file " + path + " line " +
                       std::to_string(line_no) + ": unknown family '" +
                       config.family + "'");
    const auto start = rest.find_first_not_of(" \t");
    if (start != std::string::npos) rest = rest.substr(start);
    else rest.clear();
    if (!rest.empty() && rest != "default") {
      std::stringstream pairs(rest);
      std::string pair;
      while (std::getline(pairs, pair, ';')) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos || eq == 0)
          throw InputError("grid file " + path + " line " +
                           std::to_string(line_no) +
                           ": expected key=value, got '" + pair + "'");
        config.params.emplace_back(pair.substr(0, eq), pair.substr(eq + 1));
      }
    }
    grid.push_back(std::move(config));
  }
  return grid;
}

}  // namespace adinkra::ml
