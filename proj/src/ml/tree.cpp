#include "adinkra/ml/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace adinkra::ml {

Criterion parse_criterion(const std::string& name) {
  if (name == "gini") return Criterion::gini;
  if (name == "entropy") return Criterion::entropy;
  if (name == "log_loss") return Criterion::log_loss;
  throw ConfigError("unknown split criterion '" + name + "'");
}

namespace {

std::int64_t walk(const std::vector<TreeNode>& nodes, const float* x) {
  std::int64_t i = 0;
  while (nodes[i].feature >= 0)
    i = static_cast<double>(x[nodes[i].feature]) <= nodes[i].threshold
            ? nodes[i].left
            : nodes[i].right;
  return i;
}

std::int64_t subtree_depth(const std::vector<TreeNode>& nodes,
                           std::int64_t i) {
  if (nodes[i].feature < 0) return 0;
  const auto l = subtree_depth(nodes, nodes[i].left);
  const auto r = subtree_depth(nodes, nodes[i].right);
  return 1 + (l > r ? l : r);
}

}  // namespace

std::int64_t DecisionTree::predict_one(const float* x) const {
  return nodes[walk(nodes, x)].leaf_class;
}

std::vector<std::int64_t> DecisionTree::predict(
    const FeatureMatrix& queries) const {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(queries.rows));
  for (std::int64_t i = 0; i < queries.rows; ++i)
    out.push_back(predict_one(queries.row(i)));
  return out;
}

std::int64_t DecisionTree::depth() const { return subtree_depth(nodes, 0); }

double RegressionTree::predict_one(const float* x) const {
  return nodes[walk(nodes, x)].leaf_value;
}

PresortedFeatures PresortedFeatures::build(const FeatureMatrix& m) {
  validate(m);
  PresortedFeatures s;
  s.rows = m.rows;
  s.dim = m.dim;
  s.order.resize(static_cast<std::size_t>(m.rows * m.dim));
  for (std::int64_t f = 0; f < m.dim; ++f) {
    std::int32_t* ord = s.order.data() + static_cast<std::size_t>(f * m.rows);
    std::iota(ord, ord + m.rows, 0);
    const float* values = m.values.data();
    const std::int64_t dim = m.dim;
    std::sort(ord, ord + m.rows, [values, dim, f](std::int32_t a, std::int32_t b) {
      const float va = values[a * dim + f], vb = values[b * dim + f];
      if (va != vb) return va < vb;
      return a < b;
    });
  }
  return s;
}

namespace detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SplitChoice {
  double score = kInf;
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int64_t cut = 0;  // rows falling in the left child
  std::vector<double> left_counts;
  double left_rows = 0.0, left_sum = 0.0, left_sumsq = 0.0, left_curv = 0.0;
};

// Grows one tree over presorted per-feature index ranges; a split
// partitions every feature's range stably, keeping each side sorted.
class Grower {
 public:
  Grower(const FeatureMatrix& data, const PresortedFeatures& sorted,
         bool regression)
      : data_(data), sorted_(sorted), regression_(regression) {}

  // classification configuration
  Criterion criterion = Criterion::gini;
  std::int64_t num_classes = 0;
  const std::vector<std::int32_t>* weights = nullptr;
  std::int64_t max_features = 0;  // <= 0 or >= dim scans every feature
  core::Rng* rng = nullptr;

  // regression configuration
  const std::vector<double>* target = nullptr;
  const std::vector<double>* curvature = nullptr;
  double denom_floor = 1e-6;

  std::int64_t max_depth = -1;

  std::vector<TreeNode> grow() {
    prepare();
    if (regression_) {
      double n = 0.0, sum = 0.0, sumsq = 0.0, curv = 0.0;
      for (std::int64_t i = 0; i < m_; ++i) {
        const auto row = order_[i];
        const double t = (*target)[row];
        n += 1.0;
        sum += t;
        sumsq += t * t;
        curv += (*curvature)[row];
      }
      recurse_regression(0, m_, 0, n, sum, sumsq, curv);
    } else {
      std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
      double total = 0.0;
      for (std::int64_t i = 0; i < m_; ++i) {
        const auto row = order_[i];
        const double w = row_weight(row);
        counts[data_.labels[row]] += w;
        total += w;
      }
      recurse_classification(0, m_, 0, counts, total);
    }
    return std::move(nodes_);
  }

 private:
  double row_weight(std::int32_t row) const {
    return weights ? static_cast<double>((*weights)[row]) : 1.0;
  }

  float value(std::int32_t row, std::int64_t f) const {
    return data_.values[static_cast<std::size_t>(row) *
                            static_cast<std::size_t>(data_.dim) +
                        static_cast<std::size_t>(f)];
  }

  double xlx(double count) const {
    return xlogx_[static_cast<std::size_t>(count)];
  }

  void prepare() {
    const std::int64_t rows = data_.rows, dim = data_.dim;
    // Active rows (weight > 0), in each feature's sorted order.
    m_ = 0;
    if (weights) {
      for (std::int64_t r = 0; r < rows; ++r)
        if ((*weights)[r] > 0) ++m_;
    } else {
      m_ = rows;
    }
    order_.resize(static_cast<std::size_t>(dim * m_));
    for (std::int64_t f = 0; f < dim; ++f) {
      const std::int32_t* src =
          sorted_.order.data() + static_cast<std::size_t>(f * rows);
      std::int32_t* dst = order_.data() + static_cast<std::size_t>(f * m_);
      if (weights) {
        std::int64_t pos = 0;
        for (std::int64_t i = 0; i < rows; ++i)
          if ((*weights)[src[i]] > 0) dst[pos++] = src[i];
      } else {
        std::memcpy(dst, src, static_cast<std::size_t>(rows) * sizeof(std::int32_t));
      }
    }
    scratch_.resize(static_cast<std::size_t>(m_));
    mask_.assign(static_cast<std::size_t>(rows), 0);
    if (!regression_) {
      left_cnt_.assign(static_cast<std::size_t>(num_classes), 0.0);
      if (criterion != Criterion::gini) {
        double total = 0.0;
        for (std::int64_t r = 0; r < rows; ++r)
          total += weights ? static_cast<double>((*weights)[r]) : 1.0;
        const auto w = static_cast<std::size_t>(total);
        xlogx_.resize(w + 1);
        xlogx_[0] = 0.0;
        for (std::size_t k = 1; k <= w; ++k)
          xlogx_[k] = static_cast<double>(k) * std::log(static_cast<double>(k));
      }
      if (max_features > 0 && max_features < dim) {
        feature_pool_.resize(static_cast<std::size_t>(dim));
        std::iota(feature_pool_.begin(), feature_pool_.end(), 0);
      }
    }
  }

  // Features scanned by this node, ascending.
  std::vector<std::int32_t> node_features() {
    const std::int64_t dim = data_.dim;
    std::vector<std::int32_t> feats;
    if (max_features > 0 && max_features < dim && rng != nullptr) {
      for (std::int64_t j = 0; j < max_features; ++j) {
        const auto pick =
            j + static_cast<std::int64_t>(rng->uniform_index(
                    static_cast<std::uint64_t>(dim - j)));
        std::swap(feature_pool_[j], feature_pool_[pick]);
      }
      feats.assign(feature_pool_.begin(), feature_pool_.begin() + max_features);
      std::sort(feats.begin(), feats.end());
    } else {
      feats.resize(static_cast<std::size_t>(dim));
      std::iota(feats.begin(), feats.end(), 0);
    }
    return feats;
  }

  std::int32_t add_leaf_class(const std::vector<double>& counts) {
    std::int64_t best = 0;
    for (std::int64_t c = 1; c < num_classes; ++c)
      if (counts[c] > counts[best]) best = c;
    TreeNode node;
    node.leaf_class = best;
    nodes_.push_back(node);
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::int32_t add_leaf_value(double sum, double curv) {
    TreeNode node;
    node.leaf_value = sum / std::max(curv, denom_floor);
    nodes_.push_back(node);
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  // Stably partitions every feature's [lo, hi) so rows of the chosen
  // feature's sorted prefix come first; both sides stay sorted.
  void partition(std::int64_t lo, std::int64_t hi, std::int32_t feature,
                 std::int64_t cut) {
    const std::int32_t* chosen =
        order_.data() + static_cast<std::size_t>(feature) *
                            static_cast<std::size_t>(m_);
    for (std::int64_t i = lo; i < lo + cut; ++i) mask_[chosen[i]] = 1;
    for (std::int64_t f = 0; f < data_.dim; ++f) {
      std::int32_t* ord = order_.data() + static_cast<std::size_t>(f) *
                                              static_cast<std::size_t>(m_);
      std::int64_t write = lo, spill = 0;
      for (std::int64_t i = lo; i < hi; ++i) {
        const auto row = ord[i];
        if (mask_[row])
          ord[write++] = row;
        else
          scratch_[spill++] = row;
      }
      std::memcpy(ord + write, scratch_.data(),
                  static_cast<std::size_t>(spill) * sizeof(std::int32_t));
    }
    const std::int32_t* left =
        order_.data() + static_cast<std::size_t>(feature) *
                            static_cast<std::size_t>(m_);
    for (std::int64_t i = lo; i < lo + cut; ++i) mask_[left[i]] = 0;
  }

  std::int32_t recurse_classification(std::int64_t lo, std::int64_t hi,
                                      std::int64_t depth,
                                      const std::vector<double>& counts,
                                      double total) {
    double stat = 0.0;  // gini: sum of squared counts; else sum of c ln c
    double top = 0.0;
    for (const auto c : counts) {
      stat += criterion == Criterion::gini ? c * c : (c > 0.0 ? xlx(c) : 0.0);
      top = c > top ? c : top;
    }
    const double parent_score = criterion == Criterion::gini
                                    ? total - stat / total
                                    : xlx(total) - stat;
    if (top == total || hi - lo < 2 || depth == max_depth)
      return add_leaf_class(counts);

    const auto feats = node_features();
    SplitChoice best;
    for (const auto f : feats) {
      const std::int32_t* ord = order_.data() + static_cast<std::size_t>(f) *
                                                    static_cast<std::size_t>(m_);
      std::fill(left_cnt_.begin(), left_cnt_.end(), 0.0);
      double nl = 0.0, sl = 0.0, sr = stat;
      for (std::int64_t i = lo; i < hi - 1; ++i) {
        const auto row = ord[i];
        const double w = row_weight(row);
        const auto k = data_.labels[row];
        const double cl = left_cnt_[k], cr = counts[k] - cl;
        if (criterion == Criterion::gini) {
          sl += w * w + 2.0 * w * cl;
          sr += w * w - 2.0 * w * cr;
        } else {
          sl += xlx(cl + w) - (cl > 0.0 ? xlx(cl) : 0.0);
          sr += (cr - w > 0.0 ? xlx(cr - w) : 0.0) - xlx(cr);
        }
        left_cnt_[k] = cl + w;
        nl += w;
        const float cur = value(row, f), next = value(ord[i + 1], f);
        if (next > cur) {
          const double nr = total - nl;
          const double score =
              criterion == Criterion::gini
                  ? (nl - sl / nl) + (nr - sr / nr)
                  : (xlx(nl) - sl) + (xlx(nr) - sr);
          if (score < best.score) {
            best.score = score;
            best.feature = f;
            best.threshold =
                (static_cast<double>(cur) + static_cast<double>(next)) / 2.0;
            best.cut = i + 1 - lo;
            best.left_counts = left_cnt_;
            best.left_rows = nl;
          }
        }
      }
    }

    if (best.feature < 0 || parent_score - best.score <= 1e-12 * total)
      return add_leaf_class(counts);

    TreeNode node;
    node.feature = best.feature;
    node.threshold = best.threshold;
    nodes_.push_back(node);
    const auto index = static_cast<std::int32_t>(nodes_.size() - 1);

    partition(lo, hi, best.feature, best.cut);
    std::vector<double> right_counts(counts);
    for (std::int64_t c = 0; c < num_classes; ++c)
      right_counts[c] -= best.left_counts[c];
    const auto left = recurse_classification(lo, lo + best.cut, depth + 1,
                                             best.left_counts, best.left_rows);
    const auto right = recurse_classification(lo + best.cut, hi, depth + 1,
                                              right_counts,
                                              total - best.left_rows);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  std::int32_t recurse_regression(std::int64_t lo, std::int64_t hi,
                                  std::int64_t depth, double n, double sum,
                                  double sumsq, double curv) {
    const double parent_score = sumsq - sum * sum / n;
    if (hi - lo < 2 || depth == max_depth) return add_leaf_value(sum, curv);

    const std::int64_t dim = data_.dim;
    SplitChoice best;
    for (std::int64_t f = 0; f < dim; ++f) {
      const std::int32_t* ord = order_.data() + static_cast<std::size_t>(f) *
                                                    static_cast<std::size_t>(m_);
      double nl = 0.0, sl = 0.0, ql = 0.0, hl = 0.0;
      for (std::int64_t i = lo; i < hi - 1; ++i) {
        const auto row = ord[i];
        const double t = (*target)[row];
        nl += 1.0;
        sl += t;
        ql += t * t;
        hl += (*curvature)[row];
        const float cur = value(row, f), next = value(ord[i + 1], f);
        if (next > cur) {
          const double nr = n - nl, sr = sum - sl, qr = sumsq - ql;
          const double score = (ql - sl * sl / nl) + (qr - sr * sr / nr);
          if (score < best.score) {
            best.score = score;
            best.feature = static_cast<std::int32_t>(f);
            best.threshold =
                (static_cast<double>(cur) + static_cast<double>(next)) / 2.0;
            best.cut = i + 1 - lo;
            best.left_rows = nl;
            best.left_sum = sl;
            best.left_sumsq = ql;
            best.left_curv = hl;
          }
        }
      }
    }

    if (best.feature < 0 ||
        parent_score - best.score <= 1e-12 * std::max(1.0, parent_score))
      return add_leaf_value(sum, curv);

    TreeNode node;
    node.feature = best.feature;
    node.threshold = best.threshold;
    nodes_.push_back(node);
    const auto index = static_cast<std::int32_t>(nodes_.size() - 1);

    partition(lo, hi, best.feature, best.cut);
    const auto left =
        recurse_regression(lo, lo + best.cut, depth + 1, best.left_rows,
                           best.left_sum, best.left_sumsq, best.left_curv);
    const auto right = recurse_regression(
        lo + best.cut, hi, depth + 1, n - best.left_rows, sum - best.left_sum,
        sumsq - best.left_sumsq, curv - best.left_curv);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  const FeatureMatrix& data_;
  const PresortedFeatures& sorted_;
  const bool regression_;
  std::int64_t m_ = 0;
  std::vector<std::int32_t> order_, scratch_, feature_pool_;
  std::vector<char> mask_;
  std::vector<double> xlogx_, left_cnt_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree grow_classification_tree(const FeatureMatrix& train,
                                      const PresortedFeatures& sorted,
                                      Criterion criterion,
                                      std::int64_t max_depth,
                                      std::int64_t num_classes,
                                      const std::vector<std::int32_t>* weights,
                                      std::int64_t max_features,
                                      core::Rng* rng) {
  Grower grower(train, sorted, false);
  grower.criterion = criterion == Criterion::log_loss ? Criterion::entropy
                                                      : criterion;
  grower.num_classes = num_classes;
  grower.weights = weights;
  grower.max_features = max_features;
  grower.rng = rng;
  grower.max_depth = max_depth;
  DecisionTree tree;
  tree.num_classes = num_classes;
  tree.nodes = grower.grow();
  return tree;
}

RegressionTree grow_regression_tree(const FeatureMatrix& train,
                                    const PresortedFeatures& sorted,
                                    const std::vector<double>& target,
                                    const std::vector<double>& curvature,
                                    std::int64_t max_depth,
                                    double denom_floor) {
  Grower grower(train, sorted, true);
  grower.target = &target;
  grower.curvature = &curvature;
  grower.max_depth = max_depth;
  grower.denom_floor = denom_floor;
  RegressionTree tree;
  tree.nodes = grower.grow();
  return tree;
}

}  // namespace detail

DecisionTree decision_tree_train(const FeatureMatrix& train,
                                 Criterion criterion, std::int64_t max_depth,
                                 std::int64_t num_classes) {
  validate(train, num_classes);
  if (static_cast<std::int64_t>(train.labels.size()) != train.rows ||
      train.rows < 1)
    throw PreconditionError("decision_tree: labelled training rows required");
  if (num_classes < 0) num_classes = infer_num_classes(train);
  const auto sorted = PresortedFeatures::build(train);
  return detail::grow_classification_tree(train, sorted, criterion, max_depth,
                                          num_classes, nullptr, 0, nullptr);
}

}  // namespace adinkra::ml
