#include <gtest/gtest.h>

#include <sstream>

#include "lpoison/influence.hpp"
#include "lpoison/ssl.hpp"
#include "lpoison/stats.hpp"
#include "test_util.hpp"

using namespace lpoison;

namespace {

InfluenceTable table(std::initializer_list<std::initializer_list<double>> rows) {
  InfluenceTable t;
  t.e.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) t.e(i, j++) = v;
    ++i;
  }
  return t;
}

// Share scan over every column, independent of the argmax route.
std::vector<Index> brute_force_mir(const Eigen::MatrixXd& e) {
  std::vector<Index> counts(static_cast<std::size_t>(e.cols()), 0);
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < e.cols(); ++k) total += e(i, k);
    for (Eigen::Index j = 0; j < e.cols(); ++j)
      if (total > 0.0 && e(i, j) / total > 0.5) ++counts[static_cast<std::size_t>(j)];
  }
  return counts;
}

}  // namespace

TEST(DirectInfluence, ThreePointTable) {
  const InfluenceTable t = direct_influence(test::three_point_transition());
  ASSERT_EQ(t.u(), 2u);
  ASSERT_EQ(t.l(), 1u);
  EXPECT_NEAR(t.e(0, 0), 0.3249, 1e-4);
  EXPECT_NEAR(t.e(1, 0), 0.1820, 1e-4);
}

TEST(DirectInfluence, SingleUnlabelledRow) {
  const TransitionMatrix tm =
      build_transition(rbf_weights(test::random_features(7, 2, 3), KernelConfig{1.0}), 6);
  const InfluenceTable t = direct_influence(tm);
  ASSERT_EQ(t.u(), 1u);
  EXPECT_EQ(t.e.row(0), tm.t_bar.row(6).head(6));
}

TEST(DirectInfluence, NonNegativeSubStochasticRows) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const InfluenceTable t = direct_influence(
        build_transition(rbf_weights(test::random_features(20, 2, seed), KernelConfig{3.0}), 5));
    EXPECT_TRUE((t.e.array() >= 0.0).all());
    EXPECT_TRUE((t.e.rowwise().sum().array() <= 1.0 + 1e-12).all());
  }
}

TEST(MostInfluential, ArgmaxAndTieBreak) {
  EXPECT_EQ(most_influential(table({{0.7}}), 0), 0u);
  EXPECT_EQ(most_influential(table({{0.1, 0.4, 0.2}}), 0), 1u);
  EXPECT_EQ(most_influential(table({{0.3, 0.3}}), 0), 0u);
  EXPECT_THROW(most_influential(table({{0.3, 0.3}}), 1), ValidationError);
}

TEST(MajorInfluencer, StrictThreshold) {
  EXPECT_TRUE(is_major_influencer(direct_influence(test::three_point_transition()), 0));
  EXPECT_FALSE(is_major_influencer(table({{0.25, 0.25}}), 0));
  EXPECT_TRUE(is_major_influencer(table({{0.6, 0.1}}), 0));
  EXPECT_FALSE(is_major_influencer(table({{0.0, 0.0}}), 0));
}

TEST(Mir, ThreePointInstance) {
  const MirVector m = mir(direct_influence(test::three_point_transition()));
  EXPECT_EQ(m.mir, (std::vector<Index>{2}));
  EXPECT_EQ(m.ranking, (IndexList{0}));
}

TEST(Mir, NoMajorityGivesZeros) {
  const MirVector m = mir(table({{0.2, 0.2}, {0.1, 0.1}}));
  EXPECT_EQ(m.mir, (std::vector<Index>{0, 0}));
  EXPECT_EQ(m.ranking, (IndexList{0, 1}));
}

TEST(Mir, DisjointMajoritySets) {
  const InfluenceTable t = table({{0.5, 0.1}, {0.3, 0.2}, {0.4, 0.05}, {0.1, 0.6}});
  EXPECT_EQ(brute_force_mir(t.e), (std::vector<Index>{3, 1}));
  const MirVector m = mir(t);
  EXPECT_EQ(m.mir, (std::vector<Index>{3, 1}));
  EXPECT_EQ(m.ranking, (IndexList{0, 1}));
}

TEST(Mir, RankingTiesAscending) {
  const MirVector m = mir(table({{0.9, 0.0, 0.0}, {0.0, 0.0, 0.9}, {0.0, 0.0, 0.8}, {0.0, 0.7, 0.0}}));
  EXPECT_EQ(m.mir, (std::vector<Index>{1, 1, 2}));
  EXPECT_EQ(m.ranking, (IndexList{2, 0, 1}));
}

TEST(Mir, ZeroRowsCounted) {
  const MirVector m = mir(table({{0.0, 0.0}, {0.9, 0.0}}));
  EXPECT_EQ(m.zero_rows, 1u);
  EXPECT_EQ(m.mir, (std::vector<Index>{1, 0}));
}

TEST(Mir, ExclusivityConsistencyAndOracle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index n = 8 + seed % 23;
    const Index l = 1 + seed % (n / 2);
    const InfluenceTable t = direct_influence(
        build_transition(rbf_weights(test::random_features(n, 2, seed), KernelConfig{1.0 + seed % 9}), l));
    const MirVector m = mir(t);
    EXPECT_EQ(m.mir, brute_force_mir(t.e));
    Index total = 0;
    for (Index v : m.mir) total += v;
    EXPECT_LE(total, t.u());
    for (Index i = 0; i < t.u(); ++i)
      if (const auto s = major_influencer(t, i)) {
        EXPECT_EQ(*s, most_influential(t, i));
      }
  }
}

TEST(Mir, RanksLikeSingleFlipDamage) {
  // Micro-scale check: ranking by MIR correlates positively with the actual
  // number of unlabelled predictions each single flip changes.
  std::vector<double> taus;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset d = test::blobs(15, 0.3, seed);
    const Graph g = build_graph(d, KernelConfig{20.0});
    const MirVector m = mir(direct_influence(g.transition));
    const InferenceResult base = label_propagation_closed_form(g.transition, d.observed_labels);
    std::vector<double> mir_values(m.mir.begin(), m.mir.end()), changed(d.l());
    LabelVector y = d.observed_labels;
    for (Index j = 0; j < d.l(); ++j) {
      y[j] = -y[j];
      const InferenceResult r = label_propagation_closed_form(g.transition, y);
      y[j] = -y[j];
      for (Index i = d.l(); i < d.n(); ++i) changed[j] += r.predicted[i] != base.predicted[i] ? 1.0 : 0.0;
    }
    if (const auto tau = stats::kendall_tau(mir_values, changed)) taus.push_back(*tau);
  }
  ASSERT_FALSE(taus.empty());
  EXPECT_GT(stats::median(taus), 0.0);
}

TEST(Mir, CsvExport) {
  Dataset d = test::blobs(3, 0.5, 4);
  MirVector m;
  m.mir = {0, 2, 1};
  m.ranking = rank_descending(m.mir);
  std::ostringstream out;
  write_mir_csv(out, m, d);
  std::istringstream lines(out.str());
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  EXPECT_EQ(header, "labelled_index,dataset_index,mir,rank");
  EXPECT_EQ(first, "0," + std::to_string(d.labelled_idx[0]) + ",0,3");
}
