#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpoison/attack.hpp"
#include "lpoison/dataset.hpp"
#include "lpoison/inductive.hpp"
#include "lpoison/ssl.hpp"

namespace lpoison::harness {

enum class Learner { mlp, forest };

inline std::string_view to_string(Learner l) { return l == Learner::mlp ? "mlp" : "forest"; }

inline std::string_view to_string(Generator g) {
  return g == Generator::gaussian_blobs ? "gaussian_blobs" : "two_moons";
}

inline std::string_view to_string(DataFormat f) {
  return f == DataFormat::dense_csv ? "dense_csv" : "sparse_svmlight";
}

inline DataFormat parse_format(std::string_view s) {
  if (s == "dense_csv") return DataFormat::dense_csv;
  if (s == "sparse_svmlight") return DataFormat::sparse_svmlight;
  throw ValidationError("unknown dataset format '" + std::string(s) + "'");
}

/// Where the pool and the held-out test set come from.
struct DatasetSource {
  bool synthetic = true;
  SyntheticSpec spec;          // synthetic: pool uses spec.n_per_class per class
  Index test_per_class = 100;  // synthetic: independently drawn test set
  std::string path;            // file source
  DataFormat format = DataFormat::dense_csv;
  Index dimension = 0;         // svmlight declared dimension, 0 = infer
  double test_fraction = 0.2;  // file source: held-out share

  std::string name() const {
    if (synthetic) return std::string(to_string(spec.generator));
    std::string base = std::filesystem::path(path).filename().string();
    for (char& c : base)
      if (c == ',' || c == '\n' || c == '"') c = '_';
    return base;
  }
};

struct ExperimentConfig {
  DatasetSource dataset;
  std::vector<double> labelled_fractions{0.05, 0.15, 0.25};
  /// Poison budgets as fractions of l.
  std::vector<double> poison_budgets{0.05, 0.10, 0.15, 0.20};
  std::vector<SslAlgorithm> ssl_algorithms{SslAlgorithm::propagation, SslAlgorithm::spreading};
  std::vector<Learner> learners{Learner::mlp, Learner::forest};
  std::vector<AttackMethod> attack_methods{AttackMethod::mir, AttackMethod::random, AttackMethod::greedy_oracle};
  Index repetitions = 5;
  std::uint64_t base_seed = 0;

  KernelConfig kernel;
  PropagationConfig propagation;
  PropagationSolverKind solver = PropagationSolverKind::iterative;
  MlpConfig mlp;
  ForestConfig forest;

  /// RQ3 efficiency: number of labels selected when timing each method.
  Index timing_budget = 20;
  /// Defender budget as a share of the poison budget.
  double defense_fraction = 1.0 / 3.0;

  // Single-run subcommands (infer/influence/attack/defend).
  AttackMethod attack_method = AttackMethod::mir;
  double attack_budget = 0.10;

  SslSetup ssl_setup(SslAlgorithm algo) const {
    SslSetup s;
    s.algorithm = algo;
    s.kernel = kernel;
    s.propagation = propagation;
    s.solver = solver;
    return s;
  }

  void validate() const {
    dataset.spec.validate();
    kernel.validate();
    propagation.validate();
    if (labelled_fractions.empty()) throw ValidationError("config: labelled_fractions is empty");
    for (double f : labelled_fractions)
      if (!(f > 0.0 && f < 1.0)) throw ValidationError("config: labelled fraction must be in (0,1)");
    for (double b : poison_budgets)
      if (!(b >= 0.0 && b <= 1.0)) throw ValidationError("config: poison budget must be in [0,1]");
    if (ssl_algorithms.empty()) throw ValidationError("config: no ssl algorithm selected");
    if (repetitions < 1) throw ValidationError("config: repetitions must be >= 1");
    if (!(defense_fraction >= 0.0 && defense_fraction <= 1.0))
      throw ValidationError("config: defense_fraction must be in [0,1]");
    if (!(attack_budget >= 0.0 && attack_budget <= 1.0))
      throw ValidationError("config: attack_budget must be in [0,1]");
  }
};

// ---------------------------------------------------------------------------
// JSON. Every field is optional; missing fields keep their defaults.

namespace detail {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline SslAlgorithm parse_ssl(std::string_view s) {
  if (s == "propagation") return SslAlgorithm::propagation;
  if (s == "spreading") return SslAlgorithm::spreading;
  throw ValidationError("unknown ssl algorithm '" + std::string(s) + "'");
}

inline Learner parse_learner(std::string_view s) {
  if (s == "mlp") return Learner::mlp;
  if (s == "forest") return Learner::forest;
  throw ValidationError("unknown learner '" + std::string(s) + "'");
}

inline Generator parse_generator(std::string_view s) {
  if (s == "gaussian_blobs") return Generator::gaussian_blobs;
  if (s == "two_moons") return Generator::two_moons;
  throw ValidationError("unknown generator '" + std::string(s) + "'");
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::read;
  ExperimentConfig c;
  static constexpr std::string_view known[] = {
      "dataset", "labelled_fractions", "poison_budgets", "ssl_algorithms", "learners", "attack_methods",
      "repetitions", "base_seed", "gamma", "zero_diagonal", "tolerance", "max_iterations", "clamping_alpha",
      "solver", "mlp", "forest", "timing_budget", "defense_fraction", "attack_method", "attack_budget", "notes"};
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw ValidationError("config: unknown key '" + key + "'");
  try {
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      const std::string kind = d.value("kind", std::string("synthetic"));
      if (kind == "synthetic") {
        c.dataset.synthetic = true;
        if (d.contains("generator")) c.dataset.spec.generator = detail::parse_generator(d.at("generator").get<std::string>());
        read(d, "n_per_class", c.dataset.spec.n_per_class);
        read(d, "dimension", c.dataset.spec.dimension);
        read(d, "separation", c.dataset.spec.separation);
        read(d, "noise", c.dataset.spec.noise);
        read(d, "test_per_class", c.dataset.test_per_class);
      } else if (kind == "file") {
        c.dataset.synthetic = false;
        read(d, "path", c.dataset.path);
        if (d.contains("format")) c.dataset.format = parse_format(d.at("format").get<std::string>());
        read(d, "dimension", c.dataset.dimension);
        read(d, "test_fraction", c.dataset.test_fraction);
      } else {
        throw ValidationError("config: dataset.kind must be 'synthetic' or 'file'");
      }
    }
    read(j, "labelled_fractions", c.labelled_fractions);
    read(j, "poison_budgets", c.poison_budgets);
    if (j.contains("ssl_algorithms")) {
      c.ssl_algorithms.clear();
      for (const auto& s : j.at("ssl_algorithms")) c.ssl_algorithms.push_back(detail::parse_ssl(s.get<std::string>()));
    }
    if (j.contains("learners")) {
      c.learners.clear();
      for (const auto& s : j.at("learners")) c.learners.push_back(detail::parse_learner(s.get<std::string>()));
    }
    if (j.contains("attack_methods")) {
      c.attack_methods.clear();
      for (const auto& s : j.at("attack_methods")) c.attack_methods.push_back(parse_attack_method(s.get<std::string>()));
    }
    read(j, "repetitions", c.repetitions);
    read(j, "base_seed", c.base_seed);
    read(j, "gamma", c.kernel.gamma);
    read(j, "zero_diagonal", c.kernel.zero_diagonal);
    read(j, "tolerance", c.propagation.tolerance);
    read(j, "max_iterations", c.propagation.max_iterations);
    read(j, "clamping_alpha", c.propagation.clamping_alpha);
    if (j.contains("solver")) {
      const auto s = j.at("solver").get<std::string>();
      if (s == "iterative") c.solver = PropagationSolverKind::iterative;
      else if (s == "closed_form") c.solver = PropagationSolverKind::closed_form;
      else throw ValidationError("config: solver must be 'iterative' or 'closed_form'");
    }
    if (j.contains("mlp")) {
      const auto& m = j.at("mlp");
      read(m, "hidden_units", c.mlp.hidden_units);
      read(m, "learning_rate", c.mlp.learning_rate);
      read(m, "epochs", c.mlp.epochs);
      read(m, "batch_size", c.mlp.batch_size);
    }
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      read(f, "n_trees", c.forest.n_trees);
      read(f, "min_samples_split", c.forest.min_samples_split);
      if (f.contains("max_depth") && !f.at("max_depth").is_null()) c.forest.max_depth = f.at("max_depth").get<Index>();
    }
    read(j, "timing_budget", c.timing_budget);
    read(j, "defense_fraction", c.defense_fraction);
    if (j.contains("attack_method")) c.attack_method = parse_attack_method(j.at("attack_method").get<std::string>());
    read(j, "attack_budget", c.attack_budget);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json d;
  if (c.dataset.synthetic) {
    d = {{"kind", "synthetic"},
         {"generator", to_string(c.dataset.spec.generator)},
         {"n_per_class", c.dataset.spec.n_per_class},
         {"dimension", c.dataset.spec.dimension},
         {"separation", c.dataset.spec.separation},
         {"noise", c.dataset.spec.noise},
         {"test_per_class", c.dataset.test_per_class}};
  } else {
    d = {{"kind", "file"},
         {"path", c.dataset.path},
         {"format", to_string(c.dataset.format)},
         {"dimension", c.dataset.dimension},
         {"test_fraction", c.dataset.test_fraction}};
  }
  nlohmann::json ssl = nlohmann::json::array(), learners = nlohmann::json::array(),
                 methods = nlohmann::json::array();
  for (auto a : c.ssl_algorithms) ssl.push_back(to_string(a));
  for (auto l : c.learners) learners.push_back(to_string(l));
  for (auto m : c.attack_methods) methods.push_back(to_string(m));
  return {{"dataset", d},
          {"labelled_fractions", c.labelled_fractions},
          {"poison_budgets", c.poison_budgets},
          {"ssl_algorithms", ssl},
          {"learners", learners},
          {"attack_methods", methods},
          {"repetitions", c.repetitions},
          {"base_seed", c.base_seed},
          {"gamma", c.kernel.gamma},
          {"zero_diagonal", c.kernel.zero_diagonal},
          {"tolerance", c.propagation.tolerance},
          {"max_iterations", c.propagation.max_iterations},
          {"clamping_alpha", c.propagation.clamping_alpha},
          {"solver", c.solver == PropagationSolverKind::iterative ? "iterative" : "closed_form"},
          {"mlp",
           {{"hidden_units", c.mlp.hidden_units},
            {"learning_rate", c.mlp.learning_rate},
            {"epochs", c.mlp.epochs},
            {"batch_size", c.mlp.batch_size}}},
          {"forest",
           {{"n_trees", c.forest.n_trees},
            {"min_samples_split", c.forest.min_samples_split},
            {"max_depth", c.forest.max_depth ? nlohmann::json(*c.forest.max_depth) : nlohmann::json(nullptr)}}},
          {"timing_budget", c.timing_budget},
          {"defense_fraction", c.defense_fraction},
          {"attack_method", to_string(c.attack_method)},
          {"attack_budget", c.attack_budget},
          {"notes",
           {{"kendall_variant", "tau-b"},
            {"spreading_clamping", "soft (alpha) only"},
            {"lab_selection", "uniform random"}}}};
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace lpoison::harness
