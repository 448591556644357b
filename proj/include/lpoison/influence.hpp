#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>

#include <Eigen/Dense>

#include "lpoison/dataset.hpp"
#include "lpoison/graph_kernel.hpp"

namespace lpoison {

/// u x l direct influence: e(i, j) is the T-bar weight of labelled input j
/// on unlabelled input i. Indirect (multi-hop) influence is ignored.
struct InfluenceTable {
  Eigen::MatrixXd e;

  Index u() const noexcept { return static_cast<Index>(e.rows()); }
  Index l() const noexcept { return static_cast<Index>(e.cols()); }
};

/// Share above which a labelled input is the major influencer of a row.
inline constexpr double kMajorShare = 0.5;

inline InfluenceTable direct_influence(const TransitionMatrix& tm) {
  if (tm.l < 1 || tm.u() < 1) throw ValidationError("influence: need l >= 1 and u >= 1");
  return InfluenceTable{tm.ul()};
}

/// argmax_j e(i, j), lowest column on ties.
inline Index most_influential(const InfluenceTable& table, Index row) {
  if (row >= table.u()) throw ValidationError("influence: row out of range");
  const auto r = table.e.row(static_cast<Eigen::Index>(row));
  Index best = 0;
  for (Eigen::Index j = 1; j < r.size(); ++j)
    if (r(j) > r(static_cast<Eigen::Index>(best))) best = static_cast<Index>(j);
  return best;
}

/// Column holding strictly more than half of the row's labelled influence,
/// if any. An all-zero row has no major influencer.
inline std::optional<Index> major_influencer(const InfluenceTable& table, Index row) {
  const Index s = most_influential(table, row);
  const auto r = table.e.row(static_cast<Eigen::Index>(row));
  const double total = r.sum();
  if (!(total > 0.0)) return std::nullopt;
  if (r(static_cast<Eigen::Index>(s)) / total > kMajorShare) return s;
  return std::nullopt;
}

inline bool is_major_influencer(const InfluenceTable& table, Index row) {
  return major_influencer(table, row).has_value();
}

struct MirVector {
  std::vector<Index> mir;
  /// Labelled positions sorted by descending MIR, ascending position on ties.
  IndexList ranking;
  /// Unlabelled rows whose labelled influence is exactly zero (gamma underflow).
  Index zero_rows = 0;
};

inline IndexList rank_descending(std::span<const Index> scores) {
  IndexList ranking(scores.size());
  for (Index j = 0; j < ranking.size(); ++j) ranking[j] = j;
  std::stable_sort(ranking.begin(), ranking.end(),
                   [&](Index a, Index b) { return scores[a] > scores[b]; });
  return ranking;
}

inline MirVector mir(const InfluenceTable& table) {
  MirVector out;
  out.mir.assign(table.l(), 0);
  for (Index i = 0; i < table.u(); ++i) {
    if (!(table.e.row(static_cast<Eigen::Index>(i)).sum() > 0.0)) {
      ++out.zero_rows;
      continue;
    }
    if (const auto s = major_influencer(table, i)) ++out.mir[*s];
  }
  out.ranking = rank_descending(out.mir);
  return out;
}

/// MIR of every labelled input of `data`, built from the label propagation
/// transition matrix.
inline MirVector compute_mir(const Dataset& data, const KernelConfig& kernel) {
  const Graph g = build_graph(data, kernel);
  return mir(direct_influence(g.transition));
}

/// CSV with columns labelled_index,dataset_index,mir,rank (rank 1 = most
/// influential).
inline void write_mir_csv(std::ostream& out, const MirVector& m, const Dataset& data) {
  std::vector<Index> rank(m.mir.size());
  for (Index r = 0; r < m.ranking.size(); ++r) rank[m.ranking[r]] = r + 1;
  out << "labelled_index,dataset_index,mir,rank\n";
  for (Index j = 0; j < m.mir.size(); ++j)
    out << j << ',' << data.labelled_idx[j] << ',' << m.mir[j] << ',' << rank[j] << '\n';
}

}  // namespace lpoison
