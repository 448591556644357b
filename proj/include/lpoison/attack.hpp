#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "lpoison/dataset.hpp"
#include "lpoison/graph_kernel.hpp"
#include "lpoison/influence.hpp"
#include "lpoison/rng.hpp"
#include "lpoison/ssl.hpp"

namespace lpoison {

enum class AttackMethod { mir, random, greedy_oracle };

inline std::string_view to_string(AttackMethod m) {
  switch (m) {
    case AttackMethod::mir: return "mir";
    case AttackMethod::random: return "random";
    case AttackMethod::greedy_oracle: return "greedy_oracle";
  }
  return "?";
}

inline AttackMethod parse_attack_method(std::string_view s) {
  if (s == "mir") return AttackMethod::mir;
  if (s == "random") return AttackMethod::random;
  if (s == "greedy_oracle" || s == "greedy") return AttackMethod::greedy_oracle;
  throw ValidationError("unknown attack method '" + std::string(s) + "'");
}

/// Label flips over labelled positions (indices into Dataset::labelled_idx).
struct PoisonPlan {
  IndexList flips;
  Index budget_k = 0;
  AttackMethod method = AttackMethod::mir;
  double selection_time = 0.0;  // seconds

  void validate(const Dataset& data) const {
    if (flips.size() != budget_k) throw ValidationError("plan: flip count differs from budget");
    if (budget_k > data.l()) throw ValidationError("plan: budget exceeds labelled count");
    std::vector<char> seen(data.l(), 0);
    for (Index j : flips) {
      if (j >= data.l() || seen[j]) throw ValidationError("plan: invalid or duplicate flip index");
      seen[j] = 1;
    }
  }
};

inline nlohmann::json to_json(const PoisonPlan& plan) {
  return {{"method", to_string(plan.method)},
          {"k", plan.budget_k},
          {"flips", plan.flips},
          {"selection_time_s", plan.selection_time}};
}

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void check_budget(const Dataset& data, Index k) {
  if (k > data.l()) throw ValidationError("attack: budget k exceeds number of labelled inputs");
}

}  // namespace detail

/// Flips the k labelled inputs with the highest MIR.
inline PoisonPlan mir_attack(const Dataset& data, const MirVector& m, Index k) {
  detail::check_budget(data, k);
  if (m.ranking.size() != data.l()) throw ValidationError("attack: MIR vector does not match dataset");
  PoisonPlan plan;
  plan.method = AttackMethod::mir;
  plan.budget_k = k;
  plan.flips.assign(m.ranking.begin(), m.ranking.begin() + static_cast<std::ptrdiff_t>(k));
  return plan;
}

/// MIR attack with selection_time covering graph construction, T-bar,
/// influence extraction and ranking.
inline PoisonPlan mir_attack(const Dataset& data, const KernelConfig& kernel, Index k) {
  detail::check_budget(data, k);
  const detail::Stopwatch watch;
  const MirVector m = compute_mir(data, kernel);
  PoisonPlan plan = mir_attack(data, m, k);
  plan.selection_time = watch.seconds();
  return plan;
}

/// Uniform sample of k labelled positions without replacement, sorted.
inline PoisonPlan random_attack(const Dataset& data, Index k, std::uint64_t seed) {
  detail::check_budget(data, k);
  const detail::Stopwatch watch;
  IndexList pos(data.l());
  for (Index j = 0; j < pos.size(); ++j) pos[j] = j;
  Rng rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  PoisonPlan plan;
  plan.method = AttackMethod::random;
  plan.budget_k = k;
  plan.flips.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(plan.flips.begin(), plan.flips.end());
  plan.selection_time = watch.seconds();
  return plan;
}

/// Oracle baseline: k greedy steps, each flipping the label whose flip
/// maximizes the true transductive error under `setup`. Every candidate is a
/// full SSL rerun; only the graph, which does not depend on labels, is shared.
inline PoisonPlan greedy_oracle_attack(const Dataset& data, Index k, const SslSetup& setup) {
  detail::check_budget(data, k);
  const detail::Stopwatch watch;
  const Graph g = build_graph(data, setup.kernel, setup.algorithm == SslAlgorithm::spreading);

  const Index l = data.l();
  LabelVector y = data.observed_labels;
  std::vector<char> flipped(l, 0);

  PoisonPlan plan;
  plan.method = AttackMethod::greedy_oracle;
  plan.budget_k = k;
  for (Index step = 0; step < k; ++step) {
    Index best = l;
    double best_error = -1.0;
    for (Index j = 0; j < l; ++j) {
      if (flipped[j]) continue;
      y[j] = -y[j];
      const double error = transductive_error_rate(run_ssl(g, y, setup), data);
      y[j] = -y[j];
      if (error > best_error) {
        best = j;
        best_error = error;
      }
    }
    flipped[best] = 1;
    y[best] = -y[best];
    plan.flips.push_back(best);
  }
  plan.selection_time = watch.seconds();
  return plan;
}

/// Copy of `data` with observed labels negated at the plan's positions.
inline Dataset apply_plan(const Dataset& data, const PoisonPlan& plan) {
  plan.validate(data);
  Dataset out = data;
  for (Index j : plan.flips) out.observed_labels[j] = -out.observed_labels[j];
  return out;
}

}  // namespace lpoison
