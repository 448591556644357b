#include <gtest/gtest.h>

#include <cmath>

#include "lpoison/inductive.hpp"
#include "test_util.hpp"

using namespace lpoison;

namespace {

// x < 0 -> -1, x > 0 -> +1, margin 1 around zero.
std::pair<Eigen::MatrixXd, LabelVector> threshold_data(Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
  LabelVector y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = i % 2 ? 1 : -1;
    x(static_cast<Eigen::Index>(i), 0) = y[i] * u(rng);
  }
  return {x, y};
}

}  // namespace

TEST(Mlp, SeparatesThresholdData) {
  const auto [x, y] = threshold_data(200, 3);
  MlpConfig c;
  c.seed = 3;
  const TrainedModel m = train_mlp(x, y, c);
  EXPECT_EQ(m.predict_all(x), y);
  EXPECT_EQ(m.mlp()->hidden_units(), 128u);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  const Eigen::MatrixXd z = test::random_features(5, 3, 11, 2.0).array() - 1.0;
  Eigen::VectorXd target(5);
  target << 1, 0, 1, 1, 0;
  MlpModel model(3, 16, 4);
  const MlpGradient g = model.gradient(z, target);
  constexpr double h = 1e-6;
  for (Index k = 0; k < model.parameter_count(); ++k) {
    double& p = model.parameter(k);
    const double saved = p;
    p = saved + h;
    const double up = model.loss(z, target);
    p = saved - h;
    const double down = model.loss(z, target);
    p = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = MlpModel::gradient_entry(g, k);
    EXPECT_LE(std::abs(numeric - analytic), std::max(1e-6, 1e-4 * std::abs(numeric))) << "param " << k;
  }
}

TEST(Mlp, DeterministicPerSeed) {
  const Dataset d = test::blobs(40, 0.5, 2);
  MlpConfig c;
  c.seed = 9;
  c.epochs = 20;
  const Eigen::MatrixXd probe = test::random_features(30, 2, 1, 6.0).array() - 3.0;
  EXPECT_EQ(train_mlp(d.features, d.truth_labels, c).predict_all(probe),
            train_mlp(d.features, d.truth_labels, c).predict_all(probe));
}

TEST(Mlp, SingleClassRejected) {
  const Eigen::MatrixXd x = test::random_features(4, 2, 1);
  EXPECT_THROW(train_mlp(x, LabelVector(4, 1), MlpConfig{}), ValidationError);
  EXPECT_THROW(train_forest(x, LabelVector(4, -1), ForestConfig{}), ValidationError);
}

TEST(Gini, PureAndBalanced) {
  EXPECT_EQ(gini_impurity(10, 0), 0.0);
  EXPECT_EQ(gini_impurity(0, 7), 0.0);
  EXPECT_EQ(gini_impurity(4, 4), 0.5);
}

TEST(Forest, PureNodeIsLeaf) {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  const LabelVector y{1, 1, 1, 1};
  Rng rng(1);
  const DecisionTree t(x, y, IndexList{0, 1, 2, 3}, ForestConfig{}, rng);
  ASSERT_EQ(t.nodes().size(), 1u);
  EXPECT_LT(t.nodes()[0].feature, 0);
  EXPECT_EQ(t.nodes()[0].label, 1);
}

TEST(Forest, VotesAndBootstrapSizes) {
  const Dataset d = test::blobs(30, 0.5, 3);
  ForestConfig c;
  c.n_trees = 25;
  const ForestModel f = train_forest_model(d.features, d.truth_labels, c);
  ASSERT_EQ(f.trees().size(), 25u);
  for (const auto& t : f.trees()) EXPECT_EQ(t.samples_drawn(), d.n());
  const auto v = f.votes(d.features.row(0));
  EXPECT_EQ(v.negative + v.positive, 25u);
}

TEST(Forest, CandidateFeatureCount) {
  EXPECT_EQ(ForestConfig::max_features(1), 1u);
  EXPECT_EQ(ForestConfig::max_features(2), 1u);
  EXPECT_EQ(ForestConfig::max_features(16), 4u);
  EXPECT_LE(ForestConfig::max_features(784), static_cast<Index>(std::ceil(std::sqrt(784.0))));
}

TEST(Forest, SeparatedBlobsLowTestError) {
  SyntheticSpec s;
  s.n_per_class = 100;
  s.separation = 6.0;
  s.seed = 12;
  const Dataset train = generate_synthetic(s);
  s.seed = 13;
  const Dataset test = generate_synthetic(s);
  ForestConfig c;
  c.seed = 1;
  EXPECT_LE(inductive_error_rate(train_forest(train.features, train.truth_labels, c), test), 0.05);
}

TEST(Forest, DepthLimitRespected) {
  const Dataset d = test::blobs(50, 0.5, 4, 1.0);
  ForestConfig c;
  c.n_trees = 1;
  c.max_depth = 0;
  const ForestModel f = train_forest_model(d.features, d.truth_labels, c);
  EXPECT_EQ(f.trees()[0].nodes().size(), 1u);
}

TEST(InductiveError, TruthAndConstantModels) {
  SyntheticSpec s;
  s.n_per_class = 50;
  s.separation = 20.0;
  s.noise = 0.5;
  const Dataset test = generate_synthetic(s);
  ForestConfig c;
  c.n_trees = 5;
  EXPECT_EQ(inductive_error_rate(train_forest(test.features, test.truth_labels, c), test), 0.0);
  // A stump forest with no split available predicts a constant.
  Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(4, 1);
  const TrainedModel constant = train_forest(flat, LabelVector{1, -1, 1, -1}, c);
  EXPECT_EQ(inductive_error_rate(constant, test), 0.5);
}

TEST(InductionSet, LabelledAndInferredInRowOrder) {
  const Dataset d = test::blobs(6, 0.5, 8);
  const InferenceResult r = run_ssl(d, SslSetup{});
  const TrainingSet ts = induction_training_set(d, r);
  ASSERT_EQ(ts.labels.size(), d.n());
  for (Index j = 0; j < d.l(); ++j) EXPECT_EQ(ts.labels[d.labelled_idx[j]], d.observed_labels[j]);
  for (Index i = 0; i < d.u(); ++i) EXPECT_EQ(ts.labels[d.unlabelled_idx[i]], r.predicted[d.l() + i]);
}

TEST(InductionSet, CleanInferredLabelsNearTrueLabels) {
  SyntheticSpec s;
  s.n_per_class = 150;
  s.separation = 6.0;
  s.seed = 21;
  const Dataset d = split_labelled(generate_synthetic(s), {0.25, 21});
  s.seed = 22;
  s.n_per_class = 100;
  const Dataset test = generate_synthetic(s);
  const TrainingSet ts = induction_training_set(d, run_ssl(d, SslSetup{}));
  ForestConfig c;
  c.seed = 2;
  const double inferred = inductive_error_rate(train_forest(ts.features, ts.labels, c), test);
  const double truth = inductive_error_rate(train_forest(d.features, d.truth_labels, c), test);
  EXPECT_LE(std::abs(inferred - truth), 0.02);
}
