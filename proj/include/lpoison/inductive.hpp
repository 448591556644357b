#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lpoison/dataset.hpp"
#include "lpoison/error.hpp"
#include "lpoison/rng.hpp"
#include "lpoison/ssl.hpp"

namespace lpoison {

namespace detail {

inline void check_training_set(const Eigen::MatrixXd& x, std::span<const int> y) {
  if (x.rows() < 2 || static_cast<std::size_t>(x.rows()) != y.size())
    throw ValidationError("train: need >= 2 samples and one label per row");
  bool neg = false, pos = false;
  for (int v : y) {
    if (!is_binary_label(v)) throw ValidationError("train: labels must be -1 or +1");
    (v < 0 ? neg : pos) = true;
  }
  if (!(neg && pos)) throw ValidationError("train: single-class training set");
}

}  // namespace detail

// ===========================================================================
// Multilayer perceptron: D -> hidden (ReLU) -> 1 (sigmoid), binary
// cross-entropy, plain mini-batch gradient descent.

struct MlpConfig {
  Index hidden_units = 128;
  double learning_rate = 0.01;
  int epochs = 200;
  Index batch_size = 32;
  std::uint64_t seed = 0;
};

struct MlpGradient {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;
};

class MlpModel {
 public:
  MlpModel() = default;

  /// He-initialized network for `input_dim` standardized inputs.
  MlpModel(Index input_dim, Index hidden, std::uint64_t seed) {
    const auto d = static_cast<Eigen::Index>(input_dim);
    const auto h = static_cast<Eigen::Index>(hidden);
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    w1_.resize(h, d);
    const double s1 = std::sqrt(2.0 / static_cast<double>(input_dim));
    for (Eigen::Index i = 0; i < h; ++i)
      for (Eigen::Index j = 0; j < d; ++j) w1_(i, j) = s1 * gauss(rng);
    b1_ = Eigen::VectorXd::Zero(h);
    w2_.resize(h);
    const double s2 = std::sqrt(1.0 / static_cast<double>(hidden));
    for (Eigen::Index i = 0; i < h; ++i) w2_(i) = s2 * gauss(rng);
    b2_ = 0.0;
    mean_ = Eigen::RowVectorXd::Zero(d);
    scale_ = Eigen::RowVectorXd::Ones(d);
  }

  /// Sets per-feature standardization from a training matrix.
  void fit_standardization(const Eigen::MatrixXd& x) {
    mean_ = x.colwise().mean();
    scale_.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double var = (x.col(c).array() - mean_(c)).square().mean();
      scale_(c) = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    }
  }

  Eigen::MatrixXd standardize(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean_).array().rowwise() * scale_.array();
  }

  /// P(y = +1 | x) for standardized inputs.
  Eigen::VectorXd forward(const Eigen::MatrixXd& z) const {
    const Eigen::MatrixXd hidden = ((z * w1_.transpose()).rowwise() + b1_.transpose()).cwiseMax(0.0);
    const Eigen::VectorXd logits = (hidden * w2_).array() + b2_;
    return logits.unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); });
  }

  /// Mean binary cross-entropy over standardized inputs; targets in {0,1}.
  double loss(const Eigen::MatrixXd& z, const Eigen::VectorXd& target) const {
    const Eigen::MatrixXd hidden = ((z * w1_.transpose()).rowwise() + b1_.transpose()).cwiseMax(0.0);
    const Eigen::VectorXd logits = (hidden * w2_).array() + b2_;
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      // log(1 + e^t) - y t, stable for large |t|.
      const double t = logits(i);
      total += std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))) - target(i) * t;
    }
    return total / static_cast<double>(logits.size());
  }

  MlpGradient gradient(const Eigen::MatrixXd& z, const Eigen::VectorXd& target) const {
    const double inv_n = 1.0 / static_cast<double>(z.rows());
    const Eigen::MatrixXd pre = (z * w1_.transpose()).rowwise() + b1_.transpose();
    const Eigen::MatrixXd hidden = pre.cwiseMax(0.0);
    const Eigen::VectorXd logits = (hidden * w2_).array() + b2_;
    const Eigen::VectorXd dlogit =
        (logits.unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); }) - target) * inv_n;
    MlpGradient g;
    g.w2 = hidden.transpose() * dlogit;
    g.b2 = dlogit.sum();
    const Eigen::MatrixXd dpre =
        (dlogit * w2_.transpose()).array() * (pre.array() > 0.0).cast<double>();
    g.w1 = dpre.transpose() * z;
    g.b1 = dpre.colwise().sum().transpose();
    return g;
  }

  void step(const MlpGradient& g, double lr) {
    w1_ -= lr * g.w1;
    b1_ -= lr * g.b1;
    w2_ -= lr * g.w2;
    b2_ -= lr * g.b2;
  }

  int predict(const Eigen::RowVectorXd& x) const {
    const Eigen::MatrixXd z = standardize(x);
    return forward(z)(0) >= 0.5 ? 1 : -1;
  }

  LabelVector predict_all(const Eigen::MatrixXd& x) const {
    const Eigen::VectorXd p = forward(standardize(x));
    LabelVector out(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) >= 0.5 ? 1 : -1;
    return out;
  }

  // Flat parameter access for finite-difference checks.
  Index parameter_count() const {
    return static_cast<Index>(w1_.size() + b1_.size() + w2_.size() + 1);
  }
  double& parameter(Index k) {
    auto i = static_cast<Eigen::Index>(k);
    if (i < w1_.size()) return w1_.data()[i];
    i -= w1_.size();
    if (i < b1_.size()) return b1_(i);
    i -= b1_.size();
    if (i < w2_.size()) return w2_(i);
    return b2_;
  }
  static double gradient_entry(const MlpGradient& g, Index k) {
    auto i = static_cast<Eigen::Index>(k);
    if (i < g.w1.size()) return g.w1.data()[i];
    i -= g.w1.size();
    if (i < g.b1.size()) return g.b1(i);
    i -= g.b1.size();
    if (i < g.w2.size()) return g.w2(i);
    return g.b2;
  }

  Index hidden_units() const { return static_cast<Index>(w1_.rows()); }

 private:
  Eigen::MatrixXd w1_;  // hidden x input
  Eigen::VectorXd b1_;
  Eigen::VectorXd w2_;
  double b2_ = 0.0;
  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd scale_;
};

inline MlpModel train_mlp_model(const Eigen::MatrixXd& x, std::span<const int> labels, const MlpConfig& config) {
  detail::check_training_set(x, labels);
  if (config.hidden_units < 1 || config.batch_size < 1 || config.epochs < 0 || !(config.learning_rate > 0.0))
    throw ValidationError("mlp: invalid configuration");
  MlpModel model(static_cast<Index>(x.cols()), config.hidden_units, derive_seed(config.seed, "mlp-init"));
  model.fit_standardization(x);
  const Eigen::MatrixXd z = model.standardize(x);
  const auto n = static_cast<Index>(x.rows());
  Eigen::VectorXd target(static_cast<Eigen::Index>(n));
  for (Index i = 0; i < n; ++i) target(static_cast<Eigen::Index>(i)) = labels[i] > 0 ? 1.0 : 0.0;

  Rng rng(derive_seed(config.seed, "mlp-batches"));
  IndexList order(n);
  for (Index i = 0; i < n; ++i) order[i] = i;
  Eigen::MatrixXd zb;
  Eigen::VectorXd tb;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < n; start += config.batch_size) {
      const Index stop = std::min(n, start + config.batch_size);
      const auto bs = static_cast<Eigen::Index>(stop - start);
      zb.resize(bs, z.cols());
      tb.resize(bs);
      for (Index r = start; r < stop; ++r) {
        const auto rr = static_cast<Eigen::Index>(r - start);
        zb.row(rr) = z.row(static_cast<Eigen::Index>(order[r]));
        tb(rr) = target(static_cast<Eigen::Index>(order[r]));
      }
      model.step(model.gradient(zb, tb), config.learning_rate);
    }
  }
  return model;
}

// ===========================================================================
// Random forest: bootstrap samples, axis-aligned Gini splits over a random
// subset of floor(sqrt(D)) features per node, majority vote.

struct ForestConfig {
  Index n_trees = 100;
  Index min_samples_split = 2;
  std::optional<Index> max_depth;
  std::uint64_t seed = 0;

  /// Candidate features per split for a D-dimensional input.
  static Index max_features(Index dim) {
    return std::max<Index>(1, static_cast<Index>(std::floor(std::sqrt(static_cast<double>(dim)))));
  }
};

/// 1 - sum_c p_c^2 for a binary node.
inline double gini_impurity(Index negatives, Index positives) {
  const Index n = negatives + positives;
  if (n == 0) return 0.0;
  const double pn = static_cast<double>(negatives) / static_cast<double>(n);
  const double pp = static_cast<double>(positives) / static_cast<double>(n);
  return 1.0 - pn * pn - pp * pp;
}

class DecisionTree {
 public:
  struct Node {
    // feature < 0 marks a leaf.
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 1;
  };

  DecisionTree() = default;

  /// Grows a tree on the rows of `x` listed in `sample` (duplicates allowed).
  DecisionTree(const Eigen::MatrixXd& x, std::span<const int> y, IndexList sample, const ForestConfig& config,
               Rng& rng)
      : samples_drawn_(sample.size()) {
    grow(x, y, sample, 0, config, rng);
  }

  int predict(const Eigen::RowVectorXd& row) const {
    int at = 0;
    while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
      const Node& nd = nodes_[static_cast<std::size_t>(at)];
      at = row(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(at)].label;
  }

  Index samples_drawn() const { return samples_drawn_; }
  std::span<const Node> nodes() const { return nodes_; }

 private:
  int grow(const Eigen::MatrixXd& x, std::span<const int> y, IndexList& sample, Index depth,
           const ForestConfig& config, Rng& rng) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Index neg = 0, pos = 0;
    for (Index i : sample) (y[i] < 0 ? neg : pos) += 1;
    nodes_.back().label = pos >= neg ? 1 : -1;
    const bool pure = neg == 0 || pos == 0;
    if (pure || sample.size() < config.min_samples_split || (config.max_depth && depth >= *config.max_depth))
      return id;

    const auto dim = static_cast<Index>(x.cols());
    IndexList features(dim);
    for (Index f = 0; f < dim; ++f) features[f] = f;
    std::shuffle(features.begin(), features.end(), rng);
    features.resize(ForestConfig::max_features(dim));

    const double parent = gini_impurity(neg, pos);
    double best_score = parent;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> column(sample.size());
    const double total = static_cast<double>(sample.size());
    for (Index f : features) {
      for (Index r = 0; r < sample.size(); ++r)
        column[r] = {x(static_cast<Eigen::Index>(sample[r]), static_cast<Eigen::Index>(f)), y[sample[r]]};
      std::sort(column.begin(), column.end());
      Index left_neg = 0, left_pos = 0;
      for (Index r = 0; r + 1 < column.size(); ++r) {
        (column[r].second < 0 ? left_neg : left_pos) += 1;
        if (column[r].first == column[r + 1].first) continue;
        const Index left_n = r + 1;
        const double score =
            (static_cast<double>(left_n) * gini_impurity(left_neg, left_pos) +
             (total - static_cast<double>(left_n)) * gini_impurity(neg - left_neg, pos - left_pos)) /
            total;
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (column[r].first + column[r + 1].first);
        }
      }
    }
    if (best_feature < 0) return id;

    IndexList left, right;
    for (Index i : sample)
      (x(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? left : right).push_back(i);
    sample.clear();
    sample.shrink_to_fit();
    const int l = grow(x, y, left, depth + 1, config, rng);
    const int r = grow(x, y, right, depth + 1, config, rng);
    Node& nd = nodes_[static_cast<std::size_t>(id)];
    nd.feature = best_feature;
    nd.threshold = best_threshold;
    nd.left = l;
    nd.right = r;
    return id;
  }

  std::vector<Node> nodes_;
  Index samples_drawn_ = 0;
};

class ForestModel {
 public:
  ForestModel() = default;
  explicit ForestModel(std::vector<DecisionTree> trees) : trees_(std::move(trees)) {}

  struct Votes {
    Index negative = 0;
    Index positive = 0;
  };

  Votes votes(const Eigen::RowVectorXd& row) const {
    Votes v;
    for (const auto& t : trees_) (t.predict(row) < 0 ? v.negative : v.positive) += 1;
    return v;
  }

  /// Majority vote, +1 on a tie.
  int predict(const Eigen::RowVectorXd& row) const {
    const Votes v = votes(row);
    return v.positive >= v.negative ? 1 : -1;
  }

  LabelVector predict_all(const Eigen::MatrixXd& x) const {
    LabelVector out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(x.row(i));
    return out;
  }

  std::span<const DecisionTree> trees() const { return trees_; }

 private:
  std::vector<DecisionTree> trees_;
};

inline ForestModel train_forest_model(const Eigen::MatrixXd& x, std::span<const int> labels,
                                      const ForestConfig& config) {
  detail::check_training_set(x, labels);
  if (config.n_trees < 1) throw ValidationError("forest: n_trees must be >= 1");
  const auto n = static_cast<Index>(x.rows());
  std::vector<DecisionTree> trees;
  trees.reserve(config.n_trees);
  for (Index t = 0; t < config.n_trees; ++t) {
    Rng rng(derive_seed(config.seed, "tree", {t}));
    std::uniform_int_distribution<Index> pick(0, n - 1);
    IndexList sample(n);
    for (Index& s : sample) s = pick(rng);
    trees.emplace_back(x, labels, std::move(sample), config, rng);
  }
  return ForestModel(std::move(trees));
}

// ===========================================================================

/// A trained supervised classifier mapping a feature row to {-1,+1}.
class TrainedModel {
 public:
  explicit TrainedModel(MlpModel m) : model_(std::move(m)) {}
  explicit TrainedModel(ForestModel m) : model_(std::move(m)) {}

  int predict(const Eigen::RowVectorXd& row) const {
    return std::visit([&](const auto& m) { return m.predict(row); }, model_);
  }
  LabelVector predict_all(const Eigen::MatrixXd& x) const {
    return std::visit([&](const auto& m) { return m.predict_all(x); }, model_);
  }

  const MlpModel* mlp() const { return std::get_if<MlpModel>(&model_); }
  const ForestModel* forest() const { return std::get_if<ForestModel>(&model_); }

 private:
  std::variant<MlpModel, ForestModel> model_;
};

inline TrainedModel train_mlp(const Eigen::MatrixXd& x, std::span<const int> labels, const MlpConfig& config) {
  return TrainedModel(train_mlp_model(x, labels, config));
}

inline TrainedModel train_forest(const Eigen::MatrixXd& x, std::span<const int> labels, const ForestConfig& config) {
  return TrainedModel(train_forest_model(x, labels, config));
}

/// Misclassification rate over every row of `test` (truth labels).
inline double inductive_error_rate(const TrainedModel& model, const Dataset& test) {
  if (test.n() == 0) throw ValidationError("inductive: empty test set");
  const LabelVector pred = model.predict_all(test.features);
  Index wrong = 0;
  for (Index i = 0; i < pred.size(); ++i)
    if (pred[i] != test.truth_labels[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(pred.size());
}

/// Induction training set: labelled inputs with their observed labels plus
/// unlabelled inputs with their inferred labels, in dataset row order.
struct TrainingSet {
  Eigen::MatrixXd features;
  LabelVector labels;
};

inline TrainingSet induction_training_set(const Dataset& data, const InferenceResult& result) {
  if (result.predicted.size() != data.n()) throw ValidationError("induction: result/dataset size mismatch");
  TrainingSet ts;
  ts.features = data.features;
  ts.labels.assign(data.n(), 0);
  for (Index j = 0; j < data.l(); ++j) ts.labels[data.labelled_idx[j]] = data.observed_labels[j];
  for (Index i = 0; i < data.u(); ++i) ts.labels[data.unlabelled_idx[i]] = result.predicted[data.l() + i];
  return ts;
}

}  // namespace lpoison
