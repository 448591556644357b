#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lpoison/harness.hpp"

using namespace lpoison;
using namespace lpoison::harness;

namespace {

// Small synthetic setup that keeps the experiment runners fast.
ExperimentConfig small_config() {
  ExperimentConfig c;
  c.dataset.spec.n_per_class = 20;
  c.dataset.test_per_class = 20;
  c.labelled_fractions = {0.25};
  c.poison_budgets = {0.25};
  c.repetitions = 2;
  c.mlp.epochs = 5;
  c.forest.n_trees = 5;
  c.attack_methods = {AttackMethod::mir, AttackMethod::random};
  c.timing_budget = 3;
  return c;
}

std::string csv(const Report& r) {
  std::ostringstream out;
  write_report_csv(out, r);
  return out.str();
}

const ReportRow* find(const Report& r, std::string_view metric, std::string_view ssl, std::string_view learner,
                      double budget, std::string_view arm, std::uint64_t seed) {
  for (const ReportRow& row : r)
    if (row.metric_name == metric && row.ssl_algo == ssl && row.learner == learner && row.budget == budget &&
        row.arm == arm && row.seed == seed)
      return &row;
  return nullptr;
}

}  // namespace

TEST(Config, DefaultsAndJsonRoundTrip) {
  const ExperimentConfig d;
  EXPECT_EQ(d.kernel.gamma, 20.0);
  EXPECT_EQ(d.propagation.tolerance, 1e-3);
  EXPECT_EQ(d.propagation.max_iterations, 30);
  EXPECT_EQ(d.mlp.hidden_units, 128u);
  EXPECT_EQ(d.forest.n_trees, 100u);
  const ExperimentConfig back = config_from_json(config_to_json(small_config()));
  EXPECT_EQ(config_to_json(back), config_to_json(small_config()));
}

TEST(Config, OverridesAndValidation) {
  const ExperimentConfig c = config_from_json(nlohmann::json::parse(
      R"({"gamma": 3.5, "repetitions": 2, "ssl_algorithms": ["spreading"]})"));
  EXPECT_EQ(c.kernel.gamma, 3.5);
  EXPECT_EQ(c.repetitions, 2u);
  ASSERT_EQ(c.ssl_algorithms.size(), 1u);
  EXPECT_EQ(c.ssl_algorithms[0], SslAlgorithm::spreading);
  EXPECT_EQ(c.labelled_fractions, ExperimentConfig{}.labelled_fractions);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"kernel": {"gamma": 3.5}})")), ValidationError);
  ExperimentConfig bad;
  bad.labelled_fractions = {1.5};
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = ExperimentConfig{};
  bad.kernel.gamma = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Report, CsvRoundTripAndDegenerate) {
  ReportRow a;
  a.rq = "rq1";
  a.dataset = "gaussian_blobs";
  a.seed = 9;
  a.labelled_fraction = 0.25;
  a.metric_name = "kendall_tau";
  ReportRow b = a;
  b.metric_name = "pearson_r";
  b.value = 0.125;
  std::istringstream in(csv({a, b}));
  const Report back = read_report_csv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_FALSE(back[0].value);
  EXPECT_EQ(*back[1].value, 0.125);
  EXPECT_EQ(back[1].seed, 9u);
  EXPECT_NE(csv({a}).find(",degenerate,"), std::string::npos);
}

TEST(Report, TimingRowsSeparated) {
  ReportRow det;
  det.metric_name = "transductive_error";
  det.value = 0.5;
  det.duration_s = 1.0;
  ReportRow t = det;
  t.metric_name = "selection_time_s";
  t.value.reset();
  t.timing = true;
  std::ostringstream d, tm;
  write_report_csv(d, {det, t}, false);
  write_report_csv(tm, {det, t}, true);
  EXPECT_EQ(d.str().find("selection_time_s"), std::string::npos);
  EXPECT_NE(d.str().find(",0.5,\n"), std::string::npos);
  EXPECT_NE(tm.str().find("selection_time_s"), std::string::npos);
  std::istringstream bad("bad,header\n");
  EXPECT_THROW(read_report_csv(bad), ParseError);
}

TEST(Report, AggregateAcrossSeeds) {
  Report r;
  for (std::uint64_t s = 0; s < 3; ++s) {
    ReportRow row;
    row.rq = "rq2";
    row.seed = s;
    row.metric_name = "transductive_error";
    row.value = static_cast<double>(s + 1);
    r.push_back(row);
  }
  r.push_back(r.front());
  r.back().value.reset();
  const auto rows = aggregate(r);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].summary.count, 3u);
  EXPECT_EQ(rows[0].summary.median, 2.0);
  EXPECT_EQ(rows[0].degenerate, 1u);
  EXPECT_THROW(aggregate({}), ValidationError);
}

TEST(Experiments, BudgetCount) {
  EXPECT_EQ(budget_count(0.0, 40), 0u);
  EXPECT_EQ(budget_count(0.1, 40), 4u);
  EXPECT_EQ(budget_count(0.15, 10), 2u);
  EXPECT_EQ(budget_count(1.0, 7), 7u);
}

TEST(Experiments, Rq1DeterministicWithCorrelations) {
  const Report a = run_rq1(small_config());
  EXPECT_EQ(csv(a), csv(run_rq1(small_config())));
  Index tau_rows = 0;
  for (const ReportRow& r : a) tau_rows += r.metric_name == "kendall_tau";
  EXPECT_EQ(tau_rows, 2u * 2u);
}

TEST(Experiments, Rq1DegenerateWhenMirIsConstant) {
  ExperimentConfig c = small_config();
  c.dataset.spec.n_per_class = 5;
  c.labelled_fractions = {0.2};  // l = 2
  c.kernel.gamma = 1e-4;         // near-uniform weights: nobody holds a majority
  c.ssl_algorithms = {SslAlgorithm::propagation};
  const Report r = run_rq1(c);
  bool degenerate = false;
  for (const ReportRow& row : r)
    if (row.metric_name == "kendall_tau" && !row.value) degenerate = true;
  EXPECT_TRUE(degenerate);
}

TEST(Experiments, Rq2ZeroBudgetIsClean) {
  ExperimentConfig c = small_config();
  c.repetitions = 1;
  const Report r = run_rq2(c);
  EXPECT_EQ(csv(r), csv(run_rq2(c)));
  const std::uint64_t seed = r.front().seed;
  for (SslAlgorithm algo : c.ssl_algorithms) {
    const ReportRow* zero = find(r, "transductive_error", to_string(algo), kNotApplicable, 0.0, kNotApplicable, seed);
    ASSERT_NE(zero, nullptr);
    const DataProvider p(c.dataset);
    const Dataset data = split_labelled(p.draw(seed).first, {0.25, derive_seed(seed, "split", {0})});
    EXPECT_EQ(*zero->value, transductive_error(data, c.ssl_setup(algo)));
  }
}

TEST(Experiments, Rq3TimingRowsAndMethods) {
  ExperimentConfig c = small_config();
  c.repetitions = 1;
  c.learners = {Learner::forest};
  const Report r = run_rq3(c);
  Index timing = 0, errors = 0;
  for (const ReportRow& row : r) {
    timing += row.timing;
    errors += row.metric_name == "transductive_error";
  }
  EXPECT_EQ(timing, 2u * 2u);  // fixed-k and per-budget, per method
  EXPECT_EQ(errors, 2u * 2u);  // method x ssl algorithm
  EXPECT_EQ(csv(r), csv(run_rq3(c)));
}

TEST(Experiments, Rq4ZeroDefenseArmsEqual) {
  ExperimentConfig c = small_config();
  c.repetitions = 1;
  c.defense_fraction = 0.0;
  c.learners = {};
  const Report r = run_rq4(c);
  const std::uint64_t seed = r.front().seed;
  for (SslAlgorithm algo : c.ssl_algorithms) {
    const auto name = to_string(algo);
    const double none = *find(r, "transductive_error", name, kNotApplicable, 0.25, "none", seed)->value;
    EXPECT_EQ(*find(r, "transductive_error", name, kNotApplicable, 0.25, "mir_relabel", seed)->value, none);
    EXPECT_EQ(*find(r, "transductive_error", name, kNotApplicable, 0.25, "lab", seed)->value, none);
  }
}

TEST(Experiments, AttackAndDefendShareNoneArm) {
  ExperimentConfig c = small_config();
  c.attack_budget = 0.3;
  const AttackOutput a = run_attack(c);
  const DefendOutput d = run_defend(c);
  EXPECT_EQ(a.plan.flips, d.plan.flips);
  const auto name = to_string(c.ssl_algorithms.front());
  const ReportRow* an = find(a.report, "transductive_error", name, kNotApplicable, 0.3, "none", a.report[0].seed);
  ASSERT_NE(an, nullptr);
  EXPECT_EQ(*an->value, d.row.none);
}

TEST(Experiments, InferAndInfluenceRows) {
  const ExperimentConfig c = small_config();
  const InferOutput inf = run_infer(c);
  EXPECT_EQ(inf.result.predicted.size(), inf.data.n());
  std::ostringstream p;
  write_predictions_csv(p, inf.data, inf.result);
  const std::string text = p.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(inf.data.n() + 1));
  const InfluenceOutput m = run_influence(c);
  double total = -1, u = -1;
  for (const ReportRow& r : m.report) {
    if (r.metric_name == "mir_total") total = *r.value;
    if (r.metric_name == "unlabelled_count") u = *r.value;
  }
  EXPECT_GE(total, 0.0);
  EXPECT_LE(total, u);
}

TEST(Plot, EmptyReportRejected) {
  const auto dir = std::filesystem::path(LPOISON_TEST_TMPDIR) / "plot_empty";
  try {
    emit_plot({}, PlotKind::error_vs_budget, dir, "x");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "no rows for plot");
  }
  EXPECT_THROW(parse_plot_kind("pie"), ValidationError);
}

TEST(Plot, OnePolylinePerSeries) {
  ExperimentConfig c = small_config();
  c.poison_budgets = {0.1, 0.25};
  c.learners = {Learner::forest};
  const Report r = run_rq2(c);
  const auto points = error_vs_budget_points(r);
  std::set<std::string> series;
  for (const auto& pt : points) series.insert(pt.series);
  EXPECT_EQ(series.size(), 4u);  // {prop, spread} x {transductive, forest}
  EXPECT_EQ(points.size(), 4u * 3u);
  const auto dir = std::filesystem::path(LPOISON_TEST_TMPDIR) / "plot_rq2";
  emit_plot(r, PlotKind::error_vs_budget, dir, "rq2");
  std::ifstream in(dir / "rq2.svg");
  const std::string svg((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t polylines = 0;
  for (std::size_t at = svg.find("<polyline"); at != std::string::npos; at = svg.find("<polyline", at + 1))
    ++polylines;
  EXPECT_EQ(polylines, series.size());
  EXPECT_TRUE(std::filesystem::exists(dir / "rq2.csv"));
}

TEST(Plot, CorrelationBars) {
  const Report r = run_rq1(small_config());
  const auto points = correlation_points(r);
  EXPECT_EQ(points.size(), 2u * 2u);  // {tau, r} x {prop, spread}
  for (const auto& pt : points) EXPECT_LE(std::abs(pt.y), 1.0);
}
