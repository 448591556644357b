#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "lpoison/dataset.hpp"
#include "lpoison/error.hpp"
#include "lpoison/graph_kernel.hpp"

namespace lpoison {

struct PropagationConfig {
  double tolerance = 1e-3;
  int max_iterations = 30;
  /// Label spreading only: F <- alpha S F + (1 - alpha) Y0.
  double clamping_alpha = 0.1;

  void validate() const {
    if (!(tolerance > 0.0)) throw ValidationError("propagation: tolerance must be > 0");
    if (max_iterations < 1) throw ValidationError("propagation: max_iterations must be >= 1");
    if (!(clamping_alpha >= 0.0 && clamping_alpha <= 1.0))
      throw ValidationError("propagation: clamping_alpha must be in [0,1]");
  }
};

/// Scores and predictions in graph order: entries [0, l) are the labelled
/// inputs, entry l + i is data.unlabelled_idx[i].
struct InferenceResult {
  Eigen::VectorXd scores;
  LabelVector predicted;
  int iterations_used = 0;
  bool converged = false;
  /// Number of scores that hit the sign tie rule.
  Index ties = 0;
};

/// |score| below this is a tie and resolves to +1.
inline constexpr double kSignTieThreshold = 1e-12;

inline int sign_label(double score) noexcept {
  return std::abs(score) < kSignTieThreshold ? 1 : (score > 0.0 ? 1 : -1);
}

namespace detail {

inline void check_labels(std::span<const int> y_l, Index expected_l) {
  if (y_l.size() != expected_l) throw ValidationError("ssl: label vector length does not match l");
  for (int y : y_l)
    if (!is_binary_label(y)) throw ValidationError("ssl: labels must be -1 or +1");
}

inline Eigen::VectorXd to_vector(std::span<const int> y) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) v(static_cast<Eigen::Index>(i)) = y[i];
  return v;
}

inline void finalize(InferenceResult& r) {
  r.predicted.resize(static_cast<std::size_t>(r.scores.size()));
  r.ties = 0;
  for (Eigen::Index i = 0; i < r.scores.size(); ++i) {
    if (std::abs(r.scores(i)) < kSignTieThreshold) ++r.ties;
    r.predicted[static_cast<std::size_t>(i)] = sign_label(r.scores(i));
  }
}

}  // namespace detail

/// Y <- T-bar Y, then re-clamp the labelled block, until the max-norm change
/// drops below the tolerance or the iteration cap is hit.
inline InferenceResult label_propagation_iterative(const TransitionMatrix& tm, std::span<const int> y_l,
                                                   const PropagationConfig& config) {
  config.validate();
  detail::check_labels(y_l, tm.l);
  const Eigen::VectorXd yl = detail::to_vector(y_l);
  const auto u = static_cast<Eigen::Index>(tm.u());
  const Eigen::VectorXd source = tm.ul() * yl;

  Eigen::VectorXd yu = Eigen::VectorXd::Zero(u);
  Eigen::VectorXd next(u);
  InferenceResult r;
  for (int it = 1; it <= config.max_iterations; ++it) {
    next.noalias() = tm.uu() * yu;
    next += source;
    const double delta = (next - yu).cwiseAbs().maxCoeff();
    yu.swap(next);
    r.iterations_used = it;
    if (delta < config.tolerance) {
      r.converged = true;
      break;
    }
  }
  r.scores.resize(static_cast<Eigen::Index>(tm.n()));
  r.scores << yl, yu;
  detail::finalize(r);
  return r;
}

/// Factorizes (I - T-bar_UU) once; solve() is then a closed-form label
/// propagation run for any labelling of the same graph.
///
/// I - T_UU is an M-matrix, so the elimination follows Grassmann-Taksar-Heyman:
/// each pivot is the remaining escape mass of a vertex, accumulated as a sum
/// of non-negative terms instead of 1 - T_ii. Nearly isolated vertices (T_ii
/// within rounding of 1) stay accurate; only a component with no path to a
/// labelled vertex is singular.
class PropagationSolver {
 public:
  explicit PropagationSolver(const TransitionMatrix& tm) : tm_(&tm) {
    const auto u = static_cast<Eigen::Index>(tm.u());
    // Strict upper part: transition mass among remaining vertices. Strict
    // lower part: elimination multipliers once a column is eliminated.
    f_ = tm.uu();
    f_.diagonal().setZero();
    Eigen::VectorXd escape = tm.ul().rowwise().sum();
    pivot_.resize(u);
    for (Eigen::Index k = 0; k < u; ++k) {
      const Eigen::Index rest = u - k - 1;
      double d = escape(k) + f_.row(k).tail(rest).sum();
      if (!(d > 0.0) || !std::isfinite(d)) {
        singular_ = true;
        break;
      }
      pivot_(k) = d;
      if (rest == 0) continue;
      f_.col(k).tail(rest) /= d;
      f_.bottomRightCorner(rest, rest).noalias() += f_.col(k).tail(rest) * f_.row(k).tail(rest);
      escape.tail(rest) += f_.col(k).tail(rest) * escape(k);
    }
    condition_ = singular_ ? std::numeric_limits<double>::infinity() : infinity_condition();
    if (singular_ || !std::isfinite(condition_))
      throw NumericalError("closed form: (I - T_UU) is singular (condition estimate " + std::to_string(condition_) +
                               "); some unlabelled vertices have no path to a labelled one",
                           condition_);
  }

  /// Unlabelled scores only.
  Eigen::VectorXd solve_unlabelled(const Eigen::VectorXd& yl) const { return solve_system(tm_->ul() * yl); }

  InferenceResult solve(std::span<const int> y_l) const {
    detail::check_labels(y_l, tm_->l);
    const Eigen::VectorXd yl = detail::to_vector(y_l);
    InferenceResult r;
    r.scores.resize(static_cast<Eigen::Index>(tm_->n()));
    r.scores << yl, solve_unlabelled(yl);
    r.iterations_used = 0;
    r.converged = true;
    detail::finalize(r);
    return r;
  }

  /// Infinity-norm condition number of I - T_UU.
  double condition_estimate() const { return condition_; }

 private:
  Eigen::VectorXd solve_system(Eigen::VectorXd r) const {
    const Eigen::Index u = r.size();
    for (Eigen::Index k = 0; k + 1 < u; ++k) r.tail(u - k - 1) += f_.col(k).tail(u - k - 1) * r(k);
    for (Eigen::Index k = u - 1; k >= 0; --k)
      r(k) = (r(k) + f_.row(k).tail(u - k - 1).dot(r.tail(u - k - 1))) / pivot_(k);
    return r;
  }

  // The inverse of an M-matrix is non-negative, so its norm is max(M^-1 1).
  double infinity_condition() const {
    const auto u = static_cast<Eigen::Index>(tm_->u());
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(u, u) - tm_->uu();
    const double norm = u == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
    const double inv_norm = u == 0 ? 0.0 : solve_system(Eigen::VectorXd::Ones(u)).maxCoeff();
    return norm * inv_norm;
  }

  const TransitionMatrix* tm_;
  Eigen::MatrixXd f_;
  Eigen::VectorXd pivot_;
  bool singular_ = false;
  double condition_ = 0.0;
};

/// y_U = (I - T-bar_UU)^{-1} T-bar_UL y_L.
inline InferenceResult label_propagation_closed_form(const TransitionMatrix& tm, std::span<const int> y_l) {
  return PropagationSolver(tm).solve(y_l);
}

/// Harmonic solution y_U = (D_UU - W_UU)^{-1} W_UL y_L on the raw weights,
/// D = diag(row sums of W). Kept for comparison with the T-bar route.
inline InferenceResult harmonic_closed_form(const WeightMatrix& weights, std::span<const int> y_l) {
  const Index l = y_l.size();
  if (l < 1 || l >= weights.n()) throw ValidationError("harmonic: need 1 <= l < n");
  detail::check_labels(y_l, l);
  // Same system as label propagation on P = D^{-1} W.
  TransitionMatrix p;
  p.l = l;
  p.t_bar = weights.w;
  for (Eigen::Index i = 0; i < p.t_bar.rows(); ++i) {
    const double degree = p.t_bar.row(i).sum();
    if (degree > 0.0) p.t_bar.row(i) /= degree;
  }
  const PropagationSolver solver(p);
  const Eigen::VectorXd yl = detail::to_vector(y_l);
  InferenceResult r;
  r.scores.resize(weights.w.rows());
  r.scores << yl, solver.solve_unlabelled(yl);
  r.converged = true;
  detail::finalize(r);
  return r;
}

/// F <- alpha S F + (1 - alpha) Y0 with Y0 = (y_L, 0). Labelled entries are
/// softly clamped only, so their predictions may differ from y_L.
inline InferenceResult label_spreading(const Eigen::MatrixXd& s, std::span<const int> y_l,
                                       const PropagationConfig& config) {
  config.validate();
  const Eigen::Index n = s.rows();
  if (s.cols() != n || y_l.empty() || static_cast<Eigen::Index>(y_l.size()) >= n)
    throw ValidationError("spreading: need square S and 1 <= l < n");
  detail::check_labels(y_l, y_l.size());
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(n);
  y0.head(static_cast<Eigen::Index>(y_l.size())) = detail::to_vector(y_l);
  const double alpha = config.clamping_alpha;
  const Eigen::VectorXd base = (1.0 - alpha) * y0;

  Eigen::VectorXd f = y0;
  Eigen::VectorXd next(n);
  InferenceResult r;
  for (int it = 1; it <= config.max_iterations; ++it) {
    next.noalias() = alpha * (s * f);
    next += base;
    const double delta = (next - f).cwiseAbs().maxCoeff();
    f.swap(next);
    r.iterations_used = it;
    if (delta < config.tolerance) {
      r.converged = true;
      break;
    }
  }
  r.scores = std::move(f);
  detail::finalize(r);
  return r;
}

/// Fraction of unlabelled inputs whose prediction differs from the truth.
/// `result` must be in the graph order of `data` (see InferenceResult).
inline double transductive_error_rate(const InferenceResult& result, const Dataset& data) {
  const Index l = data.l();
  const Index u = data.u();
  if (result.predicted.size() != data.n()) throw ValidationError("error rate: result/dataset size mismatch");
  if (u == 0) throw ValidationError("error rate: no unlabelled inputs remain");
  Index wrong = 0;
  for (Index i = 0; i < u; ++i)
    if (result.predicted[l + i] != data.truth_labels[data.unlabelled_idx[i]]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(u);
}

// ---------------------------------------------------------------------------
// One-call pipeline used by attacks, defenses and the harness.

enum class SslAlgorithm { propagation, spreading };
enum class PropagationSolverKind { iterative, closed_form };

inline std::string_view to_string(SslAlgorithm a) {
  return a == SslAlgorithm::propagation ? "propagation" : "spreading";
}

struct SslSetup {
  SslAlgorithm algorithm = SslAlgorithm::propagation;
  KernelConfig kernel;
  PropagationConfig propagation;
  /// Label propagation only.
  PropagationSolverKind solver = PropagationSolverKind::iterative;
};

/// Runs the configured algorithm on a prebuilt graph of `data`.
inline InferenceResult run_ssl(const Graph& graph, std::span<const int> y_l, const SslSetup& setup) {
  if (setup.algorithm == SslAlgorithm::spreading) {
    if (graph.normalized.size() == 0) return label_spreading(normalized_adjacency(graph.weights), y_l, setup.propagation);
    return label_spreading(graph.normalized, y_l, setup.propagation);
  }
  if (setup.solver == PropagationSolverKind::closed_form)
    return label_propagation_closed_form(graph.transition, y_l);
  return label_propagation_iterative(graph.transition, y_l, setup.propagation);
}

inline InferenceResult run_ssl(const Dataset& data, const SslSetup& setup) {
  const Graph g = build_graph(data, setup.kernel, setup.algorithm == SslAlgorithm::spreading);
  return run_ssl(g, data.observed_labels, setup);
}

inline double transductive_error(const Dataset& data, const SslSetup& setup) {
  return transductive_error_rate(run_ssl(data, setup), data);
}

}  // namespace lpoison
