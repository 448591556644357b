#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lpoison/attack.hpp"
#include "lpoison/dataset.hpp"
#include "lpoison/defense.hpp"
#include "lpoison/graph_kernel.hpp"
#include "lpoison/harness/config.hpp"
#include "lpoison/harness/report.hpp"
#include "lpoison/inductive.hpp"
#include "lpoison/influence.hpp"
#include "lpoison/rng.hpp"
#include "lpoison/ssl.hpp"
#include "lpoison/stats.hpp"

namespace lpoison::harness {

/// Number of labels for a budget given as a fraction of l.
inline Index budget_count(double fraction, Index l) {
  return std::min(l, static_cast<Index>(std::llround(fraction * static_cast<double>(l))));
}

/// Produces the (pool, test) pair for one repetition.
class DataProvider {
 public:
  explicit DataProvider(const DatasetSource& source) : source_(source) {
    if (!source_.synthetic) file_ = load_dataset(source_.path, source_.format, source_.dimension);
  }

  std::pair<Dataset, Dataset> draw(std::uint64_t rep_seed) const {
    if (!source_.synthetic) return holdout_split(*file_, source_.test_fraction, derive_seed(rep_seed, "holdout"));
    SyntheticSpec pool = source_.spec;
    pool.seed = derive_seed(rep_seed, "pool");
    SyntheticSpec test = source_.spec;
    test.n_per_class = source_.test_per_class;
    test.seed = derive_seed(rep_seed, "test");
    return {generate_synthetic(pool), generate_synthetic(test)};
  }

  std::string name() const { return source_.name(); }

 private:
  DatasetSource source_;
  std::optional<Dataset> file_;
};

/// Inductive error of a learner trained on labelled + inferred labels. A
/// single-class training set yields the constant classifier for that class.
inline double induced_error(const Dataset& data, const InferenceResult& result, const Dataset& test,
                            Learner learner, const ExperimentConfig& config, std::uint64_t seed) {
  const TrainingSet ts = induction_training_set(data, result);
  const bool single_class = std::all_of(ts.labels.begin(), ts.labels.end(),
                                        [&](int y) { return y == ts.labels.front(); });
  if (single_class) {
    Index wrong = 0;
    for (int y : test.truth_labels)
      if (y != ts.labels.front()) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(test.n());
  }
  if (learner == Learner::mlp) {
    MlpConfig c = config.mlp;
    c.seed = seed;
    return inductive_error_rate(train_mlp(ts.features, ts.labels, c), test);
  }
  ForestConfig c = config.forest;
  c.seed = seed;
  return inductive_error_rate(train_forest(ts.features, ts.labels, c), test);
}

namespace detail {

struct RowFactory {
  std::string rq;
  std::string dataset;
  std::uint64_t seed = 0;
  double labelled_fraction = 0.0;

  ReportRow operator()(std::string metric, std::optional<double> value) const {
    ReportRow r;
    r.rq = rq;
    r.dataset = dataset;
    r.seed = seed;
    r.labelled_fraction = labelled_fraction;
    r.metric_name = std::move(metric);
    r.value = value;
    return r;
  }
};

inline ReportRow with(ReportRow r, std::string_view ssl, std::string_view learner, std::string_view method,
                      double budget, std::string_view arm = kNotApplicable) {
  r.ssl_algo = ssl;
  r.learner = learner;
  r.attack_method = method;
  r.budget = budget;
  r.arm = arm;
  return r;
}

inline ReportRow timing_row(ReportRow r, double seconds) {
  r.value = seconds;
  r.duration_s = seconds;
  r.timing = true;
  return r;
}

inline Graph graph_for(const Dataset& data, const ExperimentConfig& config) {
  const bool spreading = std::find(config.ssl_algorithms.begin(), config.ssl_algorithms.end(),
                                   SslAlgorithm::spreading) != config.ssl_algorithms.end();
  return build_graph(data, config.kernel, spreading);
}

inline std::vector<double> budgets_with_zero(const std::vector<double>& budgets) {
  std::vector<double> out{0.0};
  for (double b : budgets)
    if (b != 0.0) out.push_back(b);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// RQ1: does MIR rank labelled inputs like their actual single-flip damage?

inline Report run_rq1(const ExperimentConfig& config) {
  config.validate();
  const DataProvider provider(config.dataset);
  Report report;
  for (Index rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t rep_seed = derive_seed(config.base_seed, "rq1", {rep});
    const auto pool = provider.draw(rep_seed).first;
    for (Index fi = 0; fi < config.labelled_fractions.size(); ++fi) {
      const double fraction = config.labelled_fractions[fi];
      const Dataset data = split_labelled(pool, {fraction, derive_seed(rep_seed, "split", {fi})});
      const detail::RowFactory row{"rq1", provider.name(), rep_seed, fraction};
      const Graph graph = detail::graph_for(data, config);
      const MirVector m = mir(direct_influence(graph.transition));
      const std::vector<double> mir_values(m.mir.begin(), m.mir.end());

      for (SslAlgorithm algo : config.ssl_algorithms) {
        const SslSetup setup = config.ssl_setup(algo);
        const auto name = to_string(algo);
        const double clean = transductive_error_rate(run_ssl(graph, data.observed_labels, setup), data);
        std::vector<double> flip_error(data.l());
        LabelVector y = data.observed_labels;
        for (Index j = 0; j < data.l(); ++j) {
          y[j] = -y[j];
          flip_error[j] = transductive_error_rate(run_ssl(graph, y, setup), data);
          y[j] = -y[j];
        }
        report.push_back(detail::with(row("transductive_error", clean), name, kNotApplicable, kNotApplicable, 0.0));
        report.push_back(detail::with(row("kendall_tau", stats::kendall_tau(mir_values, flip_error)), name,
                                      kNotApplicable, "mir", 0.0));
        report.push_back(detail::with(row("pearson_r", stats::pearson_r(mir_values, flip_error)), name,
                                      kNotApplicable, "mir", 0.0));
      }
    }
  }
  sort_report(report);
  return report;
}

// ---------------------------------------------------------------------------
// RQ2: transductive and inductive error of the MIR attack vs. budget.

inline Report run_rq2(const ExperimentConfig& config) {
  config.validate();
  const DataProvider provider(config.dataset);
  const std::vector<double> budgets = detail::budgets_with_zero(config.poison_budgets);
  Report report;
  for (Index rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t rep_seed = derive_seed(config.base_seed, "rq2", {rep});
    const auto [pool, test] = provider.draw(rep_seed);
    for (Index fi = 0; fi < config.labelled_fractions.size(); ++fi) {
      const double fraction = config.labelled_fractions[fi];
      const Dataset data = split_labelled(pool, {fraction, derive_seed(rep_seed, "split", {fi})});
      const detail::RowFactory row{"rq2", provider.name(), rep_seed, fraction};
      const Graph graph = detail::graph_for(data, config);
      const MirVector m = mir(direct_influence(graph.transition));
      for (Index ai = 0; ai < config.ssl_algorithms.size(); ++ai) {
        const SslSetup setup = config.ssl_setup(config.ssl_algorithms[ai]);
        const auto name = to_string(setup.algorithm);
        for (Index bi = 0; bi < budgets.size(); ++bi) {
          const Dataset poisoned = apply_plan(data, mir_attack(data, m, budget_count(budgets[bi], data.l())));
          const InferenceResult result = run_ssl(graph, poisoned.observed_labels, setup);
          report.push_back(detail::with(row("transductive_error", transductive_error_rate(result, poisoned)), name,
                                        kNotApplicable, "mir", budgets[bi]));
          for (Learner learner : config.learners) {
            const std::uint64_t s = derive_seed(rep_seed, "learner", {fi, ai, bi});
            report.push_back(detail::with(row("inductive_error", induced_error(poisoned, result, test, learner, config, s)),
                                          name, to_string(learner), "mir", budgets[bi]));
          }
        }
      }
    }
  }
  sort_report(report);
  return report;
}

// ---------------------------------------------------------------------------
// RQ3: effectiveness and selection cost of MIR vs. the baselines.

inline PoisonPlan select_plan(AttackMethod method, const Dataset& data, Index k, const ExperimentConfig& config,
                              std::uint64_t seed) {
  switch (method) {
    case AttackMethod::mir: return mir_attack(data, config.kernel, k);
    case AttackMethod::random: return random_attack(data, k, seed);
    case AttackMethod::greedy_oracle: return greedy_oracle_attack(data, k, config.ssl_setup(config.ssl_algorithms.front()));
  }
  throw ValidationError("unknown attack method");
}

inline Report run_rq3(const ExperimentConfig& config) {
  config.validate();
  const DataProvider provider(config.dataset);
  Report report;
  for (Index rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t rep_seed = derive_seed(config.base_seed, "rq3", {rep});
    const auto [pool, test] = provider.draw(rep_seed);
    for (Index fi = 0; fi < config.labelled_fractions.size(); ++fi) {
      const double fraction = config.labelled_fractions[fi];
      const Dataset data = split_labelled(pool, {fraction, derive_seed(rep_seed, "split", {fi})});
      const detail::RowFactory row{"rq3", provider.name(), rep_seed, fraction};
      const Graph graph = detail::graph_for(data, config);

      // Fixed-k selection cost.
      const Index k_fixed = std::min(config.timing_budget, data.l());
      for (AttackMethod method : config.attack_methods) {
        const PoisonPlan plan = select_plan(method, data, k_fixed, config, derive_seed(rep_seed, "random-fixed", {fi}));
        report.push_back(detail::timing_row(
            detail::with(row("selection_time_fixed_k_s", std::nullopt), kNotApplicable, kNotApplicable,
                         to_string(method), static_cast<double>(k_fixed) / static_cast<double>(data.l())),
            plan.selection_time));
      }

      for (Index bi = 0; bi < config.poison_budgets.size(); ++bi) {
        const double budget = config.poison_budgets[bi];
        const Index k = budget_count(budget, data.l());
        for (AttackMethod method : config.attack_methods) {
          const auto mname = to_string(method);
          const PoisonPlan plan = select_plan(method, data, k, config, derive_seed(rep_seed, "random", {fi, bi}));
          report.push_back(detail::timing_row(
              detail::with(row("selection_time_s", std::nullopt), kNotApplicable, kNotApplicable, mname, budget),
              plan.selection_time));
          const Dataset poisoned = apply_plan(data, plan);
          for (Index ai = 0; ai < config.ssl_algorithms.size(); ++ai) {
            const SslSetup setup = config.ssl_setup(config.ssl_algorithms[ai]);
            const auto name = to_string(setup.algorithm);
            const InferenceResult result = run_ssl(graph, poisoned.observed_labels, setup);
            report.push_back(detail::with(row("transductive_error", transductive_error_rate(result, poisoned)), name,
                                          kNotApplicable, mname, budget));
            for (Learner learner : config.learners) {
              const std::uint64_t s = derive_seed(rep_seed, "learner", {fi, ai, bi});
              report.push_back(detail::with(
                  row("inductive_error", induced_error(poisoned, result, test, learner, config, s)), name,
                  to_string(learner), mname, budget));
            }
          }
        }
      }
    }
  }
  sort_report(report);
  return report;
}

// ---------------------------------------------------------------------------
// RQ4: relabelling top-MIR inputs vs. labelling extra inputs.

inline Report run_rq4(const ExperimentConfig& config) {
  config.validate();
  const DataProvider provider(config.dataset);
  Report report;
  for (Index rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t rep_seed = derive_seed(config.base_seed, "rq4", {rep});
    const auto [pool, test] = provider.draw(rep_seed);
    for (Index fi = 0; fi < config.labelled_fractions.size(); ++fi) {
      const double fraction = config.labelled_fractions[fi];
      const Dataset data = split_labelled(pool, {fraction, derive_seed(rep_seed, "split", {fi})});
      const detail::RowFactory row{"rq4", provider.name(), rep_seed, fraction};
      const MirVector m = compute_mir(data, config.kernel);
      for (Index bi = 0; bi < config.poison_budgets.size(); ++bi) {
        const double budget = config.poison_budgets[bi];
        const Index k = budget_count(budget, data.l());
        const Index mbudget = static_cast<Index>(std::llround(static_cast<double>(k) * config.defense_fraction));
        const Dataset poisoned = apply_plan(data, mir_attack(data, m, k));
        const std::pair<const char*, Dataset> arms[] = {
            {"clean", data},
            {"none", poisoned},
            {"mir_relabel", relabel_top_mir(poisoned, m, mbudget)},
            {"lab", label_additional(poisoned, mbudget, derive_seed(rep_seed, "lab", {fi, bi}))},
        };
        for (Index ai = 0; ai < config.ssl_algorithms.size(); ++ai) {
          const SslSetup setup = config.ssl_setup(config.ssl_algorithms[ai]);
          const auto name = to_string(setup.algorithm);
          for (const auto& [arm, arm_data] : arms) {
            const InferenceResult result = run_ssl(arm_data, setup);
            report.push_back(detail::with(row("transductive_error", transductive_error_rate(result, arm_data)), name,
                                          kNotApplicable, "mir", budget, arm));
            for (Learner learner : config.learners) {
              const std::uint64_t s = derive_seed(rep_seed, "learner", {fi, ai, bi});
              report.push_back(detail::with(
                  row("inductive_error", induced_error(arm_data, result, test, learner, config, s)), name,
                  to_string(learner), "mir", budget, arm));
            }
          }
          report.push_back(detail::with(row("defense_budget_m", static_cast<double>(mbudget)), name, kNotApplicable,
                                        "mir", budget));
        }
      }
    }
  }
  sort_report(report);
  return report;
}

// ---------------------------------------------------------------------------
// Single-run subcommands. All of them draw the same data for a given
// (config, seed): repetition seed tagged "run", first labelled fraction,
// first SSL algorithm.

struct SingleRun {
  std::uint64_t seed = 0;
  Dataset data;
  Dataset test;
  SslSetup setup;
  detail::RowFactory row;
};

inline SingleRun prepare_single(const ExperimentConfig& config, std::string rq) {
  config.validate();
  const DataProvider provider(config.dataset);
  SingleRun run;
  run.seed = derive_seed(config.base_seed, "run");
  auto [pool, test] = provider.draw(run.seed);
  const double fraction = config.labelled_fractions.front();
  run.data = split_labelled(pool, {fraction, derive_seed(run.seed, "split", {0})});
  run.test = std::move(test);
  run.setup = config.ssl_setup(config.ssl_algorithms.front());
  run.row = detail::RowFactory{std::move(rq), provider.name(), run.seed, fraction};
  return run;
}

struct InferOutput {
  Report report;
  Dataset data;
  InferenceResult result;
};

inline InferOutput run_infer(const ExperimentConfig& config) {
  SingleRun run = prepare_single(config, "infer");
  InferOutput out;
  out.result = run_ssl(run.data, run.setup);
  const auto name = to_string(run.setup.algorithm);
  auto add = [&](const char* metric, double v) {
    out.report.push_back(detail::with(run.row(metric, v), name, kNotApplicable, kNotApplicable, 0.0));
  };
  add("transductive_error", transductive_error_rate(out.result, run.data));
  add("iterations_used", out.result.iterations_used);
  add("converged", out.result.converged ? 1.0 : 0.0);
  add("sign_ties", static_cast<double>(out.result.ties));
  for (Learner learner : config.learners)
    out.report.push_back(detail::with(
        run.row("inductive_error", induced_error(run.data, out.result, run.test, learner, config,
                                                 derive_seed(run.seed, "learner"))),
        name, to_string(learner), kNotApplicable, 0.0));
  out.data = std::move(run.data);
  return out;
}

/// dataset_index,labelled,observed,predicted,score,truth in dataset row order.
inline void write_predictions_csv(std::ostream& out, const Dataset& data, const InferenceResult& result) {
  const IndexList order = graph_order(data);
  std::vector<Index> vertex(data.n());
  for (Index v = 0; v < order.size(); ++v) vertex[order[v]] = v;
  out << "dataset_index,labelled,observed,predicted,score,truth\n";
  for (Index i = 0; i < data.n(); ++i) {
    const Index v = vertex[i];
    const bool labelled = v < data.l();
    out << i << ',' << (labelled ? 1 : 0) << ',' << (labelled ? std::to_string(data.observed_labels[v]) : "") << ','
        << result.predicted[v] << ',' << format_number(result.scores(static_cast<Eigen::Index>(v))) << ','
        << data.truth_labels[i] << '\n';
  }
}

struct InfluenceOutput {
  Report report;
  Dataset data;
  MirVector mir;
};

inline InfluenceOutput run_influence(const ExperimentConfig& config) {
  SingleRun run = prepare_single(config, "influence");
  InfluenceOutput out;
  out.mir = compute_mir(run.data, config.kernel);
  auto add = [&](const char* metric, double v) {
    out.report.push_back(detail::with(run.row(metric, v), kNotApplicable, kNotApplicable, "mir", 0.0));
  };
  Index total = 0;
  for (Index v : out.mir.mir) total += v;
  add("mir_total", static_cast<double>(total));
  add("mir_max", static_cast<double>(out.mir.mir.empty() ? 0 : out.mir.mir[out.mir.ranking.front()]));
  add("zero_influence_rows", static_cast<double>(out.mir.zero_rows));
  add("unlabelled_count", static_cast<double>(run.data.u()));
  out.data = std::move(run.data);
  return out;
}

struct AttackOutput {
  Report report;
  PoisonPlan plan;
};

inline AttackOutput run_attack(const ExperimentConfig& config) {
  SingleRun run = prepare_single(config, "attack");
  AttackOutput out;
  const Index k = budget_count(config.attack_budget, run.data.l());
  out.plan = select_plan(config.attack_method, run.data, k, config, derive_seed(run.seed, "random"));
  const auto name = to_string(run.setup.algorithm);
  const auto method = to_string(config.attack_method);
  const Dataset poisoned = apply_plan(run.data, out.plan);
  out.report.push_back(detail::with(run.row("transductive_error", transductive_error(run.data, run.setup)), name,
                                    kNotApplicable, method, config.attack_budget, "clean"));
  out.report.push_back(detail::with(run.row("transductive_error", transductive_error(poisoned, run.setup)), name,
                                    kNotApplicable, method, config.attack_budget, "none"));
  out.report.push_back(detail::with(run.row("flips", static_cast<double>(k)), name, kNotApplicable, method,
                                    config.attack_budget));
  out.report.push_back(detail::timing_row(
      detail::with(run.row("selection_time_s", std::nullopt), kNotApplicable, kNotApplicable, method,
                   config.attack_budget),
      out.plan.selection_time));
  return out;
}

struct DefendOutput {
  Report report;
  PoisonPlan plan;
  CountermeasureRow row;
};

inline DefendOutput run_defend(const ExperimentConfig& config) {
  SingleRun run = prepare_single(config, "defend");
  DefendOutput out;
  const Index k = budget_count(config.attack_budget, run.data.l());
  out.plan = select_plan(config.attack_method, run.data, k, config, derive_seed(run.seed, "random"));
  const DefenseBudget budget{static_cast<Index>(std::llround(static_cast<double>(k) * config.defense_fraction))};
  out.row = evaluate_countermeasures(run.data, out.plan, budget, run.setup, run.seed);
  const auto name = to_string(run.setup.algorithm);
  const auto method = to_string(config.attack_method);
  auto add = [&](const char* arm, double v) {
    out.report.push_back(
        detail::with(run.row("transductive_error", v), name, kNotApplicable, method, config.attack_budget, arm));
  };
  add("clean", out.row.clean);
  add("none", out.row.none);
  add("mir_relabel", out.row.mir_relabel);
  add("lab", out.row.lab);
  out.report.push_back(detail::with(run.row("defense_budget_m", static_cast<double>(budget.m)), name, kNotApplicable,
                                    method, config.attack_budget));
  return out;
}

}  // namespace lpoison::harness
