#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "lpoison/attack.hpp"
#include "lpoison/dataset.hpp"
#include "lpoison/influence.hpp"
#include "lpoison/rng.hpp"
#include "lpoison/ssl.hpp"

namespace lpoison {

/// Number of labels the defender can verify (relabel) or add.
struct DefenseBudget {
  Index m = 0;

  /// One third of the poison budget, rounded to nearest.
  static DefenseBudget third_of(Index k) {
    return DefenseBudget{static_cast<Index>(std::llround(static_cast<double>(k) / 3.0))};
  }
};

/// Resets the observed labels of the top-m labelled inputs by MIR to their
/// truth. The defender does not know which labels were poisoned.
inline Dataset relabel_top_mir(const Dataset& poisoned, const MirVector& m, Index budget) {
  if (budget > poisoned.l()) throw ValidationError("relabel: budget exceeds labelled count");
  if (m.ranking.size() != poisoned.l()) throw ValidationError("relabel: MIR vector does not match dataset");
  Dataset out = poisoned;
  for (Index r = 0; r < budget; ++r) {
    const Index j = m.ranking[r];
    out.observed_labels[j] = out.truth_labels[out.labelled_idx[j]];
  }
  return out;
}

/// Moves m uniformly chosen unlabelled inputs into the labelled set with
/// their true labels. Existing labelled positions keep their index and label.
inline Dataset label_additional(const Dataset& poisoned, Index budget, std::uint64_t seed) {
  if (budget > poisoned.u()) throw ValidationError("label_additional: budget exceeds unlabelled count");
  if (budget == poisoned.u()) throw ValidationError("label_additional: no unlabelled inputs remain");
  if (budget == 0) return poisoned;
  IndexList pos(poisoned.u());
  for (Index i = 0; i < pos.size(); ++i) pos[i] = i;
  Rng rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::vector<char> promote(poisoned.u(), 0);
  for (Index r = 0; r < budget; ++r) promote[pos[r]] = 1;

  Dataset out = poisoned;
  out.unlabelled_idx.clear();
  for (Index i = 0; i < poisoned.u(); ++i) {
    const Index row = poisoned.unlabelled_idx[i];
    if (promote[i]) {
      out.labelled_idx.push_back(row);
      out.observed_labels.push_back(out.truth_labels[row]);
    } else {
      out.unlabelled_idx.push_back(row);
    }
  }
  return out;
}

struct CountermeasureRow {
  double clean = 0.0;        // no poison
  double none = 0.0;         // poisoned, no countermeasure
  double mir_relabel = 0.0;  // poisoned, top-m MIR relabelled
  double lab = 0.0;          // poisoned, m extra true labels
  Index k = 0;
  Index m = 0;
};

/// Transductive error of the three arms on the same poisoned state. `seed`
/// feeds the LAB arm's draw (tagged "lab").
inline CountermeasureRow evaluate_countermeasures(const Dataset& clean, const PoisonPlan& plan,
                                                  DefenseBudget budget, const SslSetup& setup,
                                                  std::uint64_t seed) {
  const Dataset poisoned = apply_plan(clean, plan);
  const MirVector m = compute_mir(poisoned, setup.kernel);
  CountermeasureRow row;
  row.k = plan.budget_k;
  row.m = budget.m;
  row.clean = transductive_error(clean, setup);
  row.none = transductive_error(poisoned, setup);
  row.mir_relabel = transductive_error(relabel_top_mir(poisoned, m, budget.m), setup);
  row.lab = transductive_error(label_additional(poisoned, budget.m, derive_seed(seed, "lab")), setup);
  return row;
}

}  // namespace lpoison
