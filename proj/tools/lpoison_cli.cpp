// Command-line front end: single runs (infer, influence, attack, defend),
// the four experiment pipelines (rq1..rq4) and report plotting.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lpoison/harness.hpp"
#include "lpoison/lpoison.hpp"

namespace fs = std::filesystem;
using namespace lpoison;
using namespace lpoison::harness;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string dataset_path;
  std::string format = "dense_csv";
  std::size_t dimension = 0;
  std::optional<std::string> method;
  std::optional<double> budget;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment configuration");
  cmd->add_option("--seed", o.seed, "Base seed (overrides config base_seed)");
  cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--dataset", o.dataset_path, "Dataset file (overrides the synthetic source)");
  cmd->add_option("--format", o.format, "Dataset format: dense_csv | sparse_svmlight")->capture_default_str();
  cmd->add_option("--dim", o.dimension, "Declared feature dimension for svmlight files (0 = infer)");
}

ExperimentConfig effective_config(const CommonOptions& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.seed) c.base_seed = *o.seed;
  if (!o.dataset_path.empty()) {
    c.dataset.synthetic = false;
    c.dataset.path = o.dataset_path;
    c.dataset.format = parse_format(o.format);
    c.dataset.dimension = o.dimension;
  }
  if (o.method) c.attack_method = parse_attack_method(*o.method);
  if (o.budget) c.attack_budget = *o.budget;
  c.validate();
  return c;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void write_outputs(const fs::path& dir, const ExperimentConfig& config, const Report& report, bool summary) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "config.json");
    out << config_to_json(config).dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "report.csv");
    write_report_csv(out, report, false);
  }
  const bool has_timings = std::any_of(report.begin(), report.end(), [](const ReportRow& r) { return r.timing; });
  if (has_timings) {
    auto out = open_out(dir / "timings.csv");
    write_report_csv(out, report, true);
  }
  if (summary && !report.empty()) {
    Report deterministic, timings;
    for (const auto& r : report) (r.timing ? timings : deterministic).push_back(r);
    if (!deterministic.empty()) {
      auto out = open_out(dir / "summary.csv");
      write_summary_csv(out, aggregate(deterministic));
    }
    if (!timings.empty()) {
      auto out = open_out(dir / "timings_summary.csv");
      write_summary_csv(out, aggregate(timings));
    }
  }
  std::cout << "wrote " << (dir / "report.csv").string() << '\n';
}

void write_plan(const fs::path& dir, const PoisonPlan& plan) {
  auto out = open_out(dir / "plan.json");
  out << to_json(plan).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label propagation poisoning toolkit: MIR influence, attacks, countermeasures and experiments"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string report_path;
  std::string plot_kind = "error_vs_budget";

  auto* infer = app.add_subcommand("infer", "Run label propagation or spreading on one split");
  auto* influence = app.add_subcommand("influence", "Compute the MIR of every labelled input (mir.csv)");
  auto* attack = app.add_subcommand("attack", "Select a poison plan and evaluate it (plan.json)");
  auto* defend = app.add_subcommand("defend", "Compare MIR relabelling, extra labels and no defense");
  auto* rq1 = app.add_subcommand("rq1", "Correlation between MIR and single-flip damage");
  auto* rq2 = app.add_subcommand("rq2", "Error vs. poison budget for each SSL algorithm and learner");
  auto* rq3 = app.add_subcommand("rq3", "Effectiveness and selection time of MIR vs. baselines");
  auto* rq4 = app.add_subcommand("rq4", "Countermeasure comparison at one third of the poison budget");
  auto* plot = app.add_subcommand("plot", "Render a report.csv as SVG + CSV");

  for (auto* cmd : {infer, influence, attack, defend, rq1, rq2, rq3, rq4}) add_common(cmd, opts);
  for (auto* cmd : {attack, defend}) {
    cmd->add_option("--method", opts.method, "mir | random | greedy_oracle");
    cmd->add_option("--budget", opts.budget, "Poison budget as a fraction of labelled inputs");
  }
  plot->add_option("--report", report_path, "Input report.csv")->required();
  plot->add_option("--kind", plot_kind, "error_vs_budget | correlation_bar")->capture_default_str();
  plot->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path dir = opts.out_dir;
    if (plot->parsed()) {
      std::ifstream in(report_path);
      if (!in) throw std::runtime_error("cannot open report '" + report_path + "'");
      const Report report = read_report_csv(in);
      emit_plot(report, parse_plot_kind(plot_kind), dir, plot_kind);
      std::cout << "wrote " << (dir / (plot_kind + ".svg")).string() << '\n';
      return 0;
    }

    const ExperimentConfig config = effective_config(opts);
    if (infer->parsed()) {
      const InferOutput out = run_infer(config);
      write_outputs(dir, config, out.report, false);
      auto pred = open_out(dir / "predictions.csv");
      write_predictions_csv(pred, out.data, out.result);
    } else if (influence->parsed()) {
      const InfluenceOutput out = run_influence(config);
      write_outputs(dir, config, out.report, false);
      auto csv = open_out(dir / "mir.csv");
      write_mir_csv(csv, out.mir, out.data);
    } else if (attack->parsed()) {
      const AttackOutput out = run_attack(config);
      write_outputs(dir, config, out.report, false);
      write_plan(dir, out.plan);
    } else if (defend->parsed()) {
      const DefendOutput out = run_defend(config);
      write_outputs(dir, config, out.report, false);
      write_plan(dir, out.plan);
    } else if (rq1->parsed()) {
      const Report report = run_rq1(config);
      write_outputs(dir, config, report, true);
      emit_plot(report, PlotKind::correlation_bar, dir, "correlation_bar");
    } else if (rq2->parsed()) {
      const Report report = run_rq2(config);
      write_outputs(dir, config, report, true);
      emit_plot(report, PlotKind::error_vs_budget, dir, "error_vs_budget");
    } else if (rq3->parsed()) {
      write_outputs(dir, config, run_rq3(config), true);
    } else if (rq4->parsed()) {
      write_outputs(dir, config, run_rq4(config), true);
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
