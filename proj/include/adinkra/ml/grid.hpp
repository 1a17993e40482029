#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "adinkra/ml/features.hpp"

namespace adinkra::ml {

// One grid entry: a classifier family plus key=value parameters. An
// empty parameter list (serialised as "default") means the family's
// documented defaults:
//   knn            n_neighbors=5, weights=uniform, p=2
//   linear_svc     loss=squared_hinge, C=1.0, penalty=l2, max_iter=1000
//   decision_tree  criterion=gini, max_depth=None, splitter=best
//   random_forest  n_estimators=100, criterion=gini, max_depth=None
//   gradient_boost n_estimators=100, max_depth=6, objective=multi:softprob
//   mlp            hidden_layer_sizes=100, activation=relu, max_iter=200
// Unknown families and unknown keys are rejected. Multi-layer MLP widths
// join with 'x' (e.g. hidden_layer_sizes=512x256).
struct GridConfig {
  std::string family;
  std::vector<std::pair<std::string, std::string>> params;
};

// "default" for an empty parameter list, else "key=value;key=value;...".
std::string params_string(const GridConfig& config);

// The full published parameter study: every classical row of the
// benchmark table, defaults included.
std::vector<GridConfig> paper_grid();

// One modest configuration per family, sized for desk-scale features.
std::vector<GridConfig> desk_grid();

struct GridRow {
  std::string family;
  std::string params;
  int run = 0;
  double accuracy = 0.0;  // fraction in [0, 1]
};

struct GridMean {
  std::string family;
  std::string params;
  double mean_accuracy = 0.0;
};

struct GridReport {
  std::vector<GridRow> rows;       // per completed run, grid order
  std::vector<GridMean> means;     // per configuration with >= 1 run
  std::vector<std::string> failures;  // "<family> <params>: <reason>"
};

// Trains every configuration `runs` times, each run on a row-shuffled
// copy of `train` (shuffle seed hash_combine(seed, config_index, run)),
// and scores it on `test`. Distance- and margin-based families (knn,
// linear_svc, mlp) see features standardised with statistics fitted on
// the shuffled training split; tree families consume raw features. A
// failing configuration or run lands in `failures` and the grid
// continues.
GridReport run_grid(const FeatureMatrix& train, const FeatureMatrix& test,
                    const std::vector<GridConfig>& grid, std::uint64_t seed,
                    int runs = 5, std::int64_t num_classes = -1,
                    std::ostream* progress = nullptr);

// CSV artifacts: per-run rows (family,params,run,accuracy) and aggregate
// means (family,params,mean_accuracy), both with a header line and six
// decimal places.
void write_grid_csv(const GridReport& report, const std::string& runs_path,
                    const std::string& means_path);

// One configuration per line: the family name, optionally followed by
// whitespace and key=value pairs joined with ';' (or the word
// "default"). '#' lines and blank lines are skipped.
std::vector<GridConfig> parse_grid_file(const std::string& path);

}  // namespace adinkra::ml
