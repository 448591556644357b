#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "lpoison/dataset.hpp"
#include "lpoison/error.hpp"

namespace lpoison {

struct KernelConfig {
  /// RBF width, gamma = 1 / (2 sigma^2).
  double gamma = 20.0;
  /// Drop self-similarity (w_ii = 0). Off by default: the RBF formula gives 1.
  bool zero_diagonal = false;

  double sigma() const { return 1.0 / std::sqrt(2.0 * gamma); }

  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
      throw ValidationError("kernel: gamma must be finite and > 0");
  }
};

/// Dense symmetric RBF similarity matrix.
struct WeightMatrix {
  Eigen::MatrixXd w;

  Index n() const noexcept { return static_cast<Index>(w.rows()); }
};

/// Row-stochastic label transition matrix with the l labelled rows first.
/// Labelled rows are identity rows (clamped labels).
struct TransitionMatrix {
  Eigen::MatrixXd t_bar;
  Index l = 0;

  Index n() const noexcept { return static_cast<Index>(t_bar.rows()); }
  Index u() const noexcept { return n() - l; }

  auto uu() const {
    const auto li = static_cast<Eigen::Index>(l);
    return t_bar.bottomRightCorner(t_bar.rows() - li, t_bar.cols() - li);
  }
  auto ul() const {
    const auto li = static_cast<Eigen::Index>(l);
    return t_bar.bottomLeftCorner(t_bar.rows() - li, li);
  }
};

/// w_ij = exp(-gamma ||x_i - x_j||^2). Upper triangle computed, then mirrored.
inline WeightMatrix rbf_weights(const Eigen::MatrixXd& features, const KernelConfig& config) {
  config.validate();
  const Eigen::Index n = features.rows();
  const Eigen::Index dim = features.cols();
  if (n < 2) throw ValidationError("kernel: need at least 2 inputs");
  if (!features.allFinite()) throw ValidationError("kernel: non-finite feature value");

  WeightMatrix out;
  out.w.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.w(i, i) = config.zero_diagonal ? 0.0 : 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (Eigen::Index k = 0; k < dim; ++k) {
        const double diff = features(i, k) - features(j, k);
        d2 += diff * diff;
      }
      const double v = std::exp(-config.gamma * d2);
      out.w(i, j) = v;
      out.w(j, i) = v;
    }
  }
  return out;
}

/// Unlabelled row i of T is w_ij / sum_k w_kj (column-sum normalization);
/// T-bar divides each such row by its sum. Labelled rows are identity rows.
inline TransitionMatrix build_transition(const WeightMatrix& weights, Index l) {
  const Index n = weights.n();
  if (l < 1 || l >= n) throw ValidationError("transition: need 1 <= l < n");
  const Eigen::MatrixXd& w = weights.w;
  const Eigen::VectorXd column_sums = w.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < column_sums.size(); ++j)
    if (!(column_sums(j) > 0.0)) throw ValidationError("transition: zero column sum in weight matrix");

  TransitionMatrix tm;
  tm.l = l;
  const auto ni = static_cast<Eigen::Index>(n);
  const auto li = static_cast<Eigen::Index>(l);
  tm.t_bar = Eigen::MatrixXd::Zero(ni, ni);
  for (Eigen::Index i = 0; i < li; ++i) tm.t_bar(i, i) = 1.0;
  for (Eigen::Index i = li; i < ni; ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < ni; ++j) {
      const double t = w(i, j) / column_sums(j);
      tm.t_bar(i, j) = t;
      row_sum += t;
    }
    if (!(row_sum > 0.0)) throw ValidationError("transition: zero row in transition matrix");
    tm.t_bar.row(i) /= row_sum;
  }
  return tm;
}

/// S = D^{-1/2} W D^{-1/2} with D the row-sum degree matrix.
inline Eigen::MatrixXd normalized_adjacency(const WeightMatrix& weights) {
  if (weights.n() < 2) throw ValidationError("normalized_adjacency: need at least 2 inputs");
  const Eigen::VectorXd degree = weights.w.rowwise().sum();
  if (!(degree.minCoeff() > 0.0)) throw ValidationError("normalized_adjacency: zero degree");
  const Eigen::VectorXd inv_sqrt = degree.array().rsqrt();
  const Eigen::Index n = weights.w.rows();
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i, i) = weights.w(i, i) * inv_sqrt(i) * inv_sqrt(i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = weights.w(i, j) * inv_sqrt(i) * inv_sqrt(j);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Dataset-level view: the graph is built over the rows of a Dataset permuted
// so that labelled inputs come first (labelled_idx order, then unlabelled_idx).

/// Dataset row index of each graph vertex.
inline IndexList graph_order(const Dataset& data) {
  IndexList order;
  order.reserve(data.n());
  order.insert(order.end(), data.labelled_idx.begin(), data.labelled_idx.end());
  order.insert(order.end(), data.unlabelled_idx.begin(), data.unlabelled_idx.end());
  return order;
}

inline Eigen::MatrixXd ordered_features(const Dataset& data) {
  const IndexList order = graph_order(data);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(order.size()), data.features.cols());
  for (Index r = 0; r < order.size(); ++r)
    x.row(static_cast<Eigen::Index>(r)) = data.features.row(static_cast<Eigen::Index>(order[r]));
  return x;
}

struct Graph {
  WeightMatrix weights;
  TransitionMatrix transition;
  Eigen::MatrixXd normalized;  // empty unless requested
};

inline Graph build_graph(const Dataset& data, const KernelConfig& config, bool with_normalized = false) {
  Graph g;
  g.weights = rbf_weights(ordered_features(data), config);
  g.transition = build_transition(g.weights, data.l());
  if (with_normalized) g.normalized = normalized_adjacency(g.weights);
  return g;
}

}  // namespace lpoison
