#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lpoison/error.hpp"
#include "lpoison/rng.hpp"

namespace lpoison {

using Index = std::size_t;
using IndexList = std::vector<Index>;
/// Binary class labels are stored as -1 / +1.
using LabelVector = std::vector<int>;

inline bool is_binary_label(int y) noexcept { return y == -1 || y == 1; }

/// Feature matrix plus the labelled/unlabelled partition seen by the learner.
///
/// `observed_labels[j]` is the (possibly poisoned) label of
/// `features.row(labelled_idx[j])`; `truth_labels` is indexed by dataset row
/// and is never touched by an attack.
struct Dataset {
  Eigen::MatrixXd features;
  LabelVector truth_labels;
  IndexList labelled_idx;
  IndexList unlabelled_idx;
  LabelVector observed_labels;

  Index n() const noexcept { return static_cast<Index>(features.rows()); }
  Index dim() const noexcept { return static_cast<Index>(features.cols()); }
  Index l() const noexcept { return labelled_idx.size(); }
  Index u() const noexcept { return unlabelled_idx.size(); }

  /// Throws ValidationError if any structural invariant is broken.
  void validate() const {
    const Index rows = n();
    if (truth_labels.size() != rows)
      throw ValidationError("dataset: truth label count does not match row count");
    if (observed_labels.size() != labelled_idx.size())
      throw ValidationError("dataset: observed label count does not match labelled count");
    if (labelled_idx.size() + unlabelled_idx.size() != rows)
      throw ValidationError("dataset: labelled and unlabelled sets do not cover all rows");
    std::vector<char> seen(rows, 0);
    auto mark = [&](const IndexList& idx) {
      for (Index i : idx) {
        if (i >= rows || seen[i]) throw ValidationError("dataset: index sets are not a partition");
        seen[i] = 1;
      }
    };
    mark(labelled_idx);
    mark(unlabelled_idx);
    for (int y : truth_labels)
      if (!is_binary_label(y)) throw ValidationError("dataset: truth label outside {-1,+1}");
    for (int y : observed_labels)
      if (!is_binary_label(y)) throw ValidationError("dataset: observed label outside {-1,+1}");
  }
};

/// Wraps a fully labelled feature matrix: every row is labelled with its truth.
inline Dataset make_labelled_dataset(Eigen::MatrixXd features, LabelVector labels) {
  Dataset d;
  d.features = std::move(features);
  d.truth_labels = std::move(labels);
  d.labelled_idx.resize(d.truth_labels.size());
  for (Index i = 0; i < d.labelled_idx.size(); ++i) d.labelled_idx[i] = i;
  d.observed_labels = d.truth_labels;
  d.validate();
  return d;
}

/// Keeps only `rows` (in the given order), fully labelled with truth.
inline Dataset select_rows(const Dataset& data, std::span<const Index> rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  LabelVector y(rows.size());
  for (Index r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = data.features.row(static_cast<Eigen::Index>(rows[r]));
    y[r] = data.truth_labels[rows[r]];
  }
  return make_labelled_dataset(std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Synthetic data

enum class Generator { gaussian_blobs, two_moons };

struct SyntheticSpec {
  Generator generator = Generator::gaussian_blobs;
  Index n_per_class = 200;
  Index dimension = 2;
  double separation = 4.0;
  double noise = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_per_class < 2) throw ValidationError("synthetic: n_per_class must be >= 2");
    if (dimension < 1) throw ValidationError("synthetic: dimension must be >= 1");
    if (generator == Generator::two_moons && dimension < 2)
      throw ValidationError("synthetic: two_moons needs dimension >= 2");
    if (!(separation >= 0.0) || !std::isfinite(separation))
      throw ValidationError("synthetic: separation must be finite and >= 0");
    if (!(noise >= 0.0) || !std::isfinite(noise))
      throw ValidationError("synthetic: noise must be finite and >= 0");
  }
};

/// Class centres of the blob generator: -separation/2 and +separation/2 on
/// the first axis, zero elsewhere.
inline Eigen::VectorXd blob_centre(const SyntheticSpec& spec, int label) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.dimension));
  c(0) = 0.5 * spec.separation * label;
  return c;
}

/// Rows [0, n_per_class) are class -1, the rest class +1. Split later.
inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Index n = 2 * spec.n_per_class;
  const auto dim = static_cast<Eigen::Index>(spec.dimension);
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), dim);
  LabelVector y(n);
  for (Index i = 0; i < n; ++i) {
    const int label = i < spec.n_per_class ? -1 : 1;
    const auto row = static_cast<Eigen::Index>(i);
    y[i] = label;
    switch (spec.generator) {
      case Generator::gaussian_blobs: {
        const Eigen::VectorXd c = blob_centre(spec, label);
        for (Eigen::Index d = 0; d < dim; ++d) x(row, d) = c(d) + spec.noise * gauss(rng);
        break;
      }
      case Generator::two_moons: {
        // Evenly spaced arcs; `separation` is the vertical offset of the
        // inner moon (0.5 gives the textbook layout).
        const Index k = i % spec.n_per_class;
        const double t = std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(spec.n_per_class - 1);
        double px = std::cos(t), py = std::sin(t);
        if (label == 1) {
          px = 1.0 - px;
          py = 1.0 - py - spec.separation;
        }
        x(row, 0) = px + spec.noise * gauss(rng);
        x(row, 1) = py + spec.noise * gauss(rng);
        for (Eigen::Index d = 2; d < dim; ++d) x(row, d) = spec.noise * gauss(rng);
        break;
      }
    }
  }
  return make_labelled_dataset(std::move(x), std::move(y));
}

// ---------------------------------------------------------------------------
// Labelled / unlabelled split

struct SplitSpec {
  double labelled_fraction = 0.25;
  std::uint64_t seed = 0;
};

/// Uniform random partition. The draw is repeated from the same stream until
/// both classes appear among the labelled inputs.
inline Dataset split_labelled(const Dataset& data, const SplitSpec& spec) {
  const Index n = data.n();
  if (n < 2) throw ValidationError("split: need at least 2 inputs");
  if (!(spec.labelled_fraction > 0.0 && spec.labelled_fraction <= 1.0))
    throw ValidationError("split: labelled_fraction must be in (0,1]");
  const bool has_neg = std::find(data.truth_labels.begin(), data.truth_labels.end(), -1) !=
                       data.truth_labels.end();
  const bool has_pos = std::find(data.truth_labels.begin(), data.truth_labels.end(), 1) !=
                       data.truth_labels.end();
  if (!has_neg || !has_pos) throw ValidationError("split: both classes must be present");

  const auto l = static_cast<Index>(std::llround(spec.labelled_fraction * static_cast<double>(n)));
  if (l < 2) throw ValidationError("split: labelled_fraction too small, yields fewer than 2 labelled inputs");
  if (l >= n) throw ValidationError("split: labelled_fraction leaves no unlabelled inputs");

  Rng rng(spec.seed);
  IndexList perm(n);
  constexpr int kMaxDraws = 10000;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    for (Index i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    bool neg = false, pos = false;
    for (Index j = 0; j < l; ++j) (data.truth_labels[perm[j]] < 0 ? neg : pos) = true;
    if (!(neg && pos)) continue;

    Dataset out;
    out.features = data.features;
    out.truth_labels = data.truth_labels;
    out.labelled_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(l));
    out.unlabelled_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(l), perm.end());
    std::sort(out.labelled_idx.begin(), out.labelled_idx.end());
    std::sort(out.unlabelled_idx.begin(), out.unlabelled_idx.end());
    out.observed_labels.reserve(l);
    for (Index i : out.labelled_idx) out.observed_labels.push_back(out.truth_labels[i]);
    return out;
  }
  throw ValidationError("split: could not draw a labelled set containing both classes");
}

/// Splits a fully labelled dataset into (pool, test) with `test_fraction` of
/// the rows held out. Both parts come back fully labelled.
inline std::pair<Dataset, Dataset> holdout_split(const Dataset& data, double test_fraction,
                                                 std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ValidationError("holdout: test_fraction must be in (0,1)");
  const Index n = data.n();
  const auto n_test = static_cast<Index>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test < 1 || n_test >= n) throw ValidationError("holdout: degenerate test size");
  IndexList perm(n);
  for (Index i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  IndexList test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  IndexList pool(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(test.begin(), test.end());
  std::sort(pool.begin(), pool.end());
  return {select_rows(data, pool), select_rows(data, test)};
}

// ---------------------------------------------------------------------------
// File loading

enum class DataFormat { dense_csv, sparse_svmlight };

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string at_line(std::string_view what, std::size_t line) {
  return std::string(what) + " at line " + std::to_string(line);
}

// Accepts {-1,+1} or {0,1} encodings; returns the raw integer (0 kept for now).
inline int parse_label(std::string_view field, std::size_t line) {
  double v = 0.0;
  if (!parse_double(field, v)) throw ParseError(at_line("malformed label", line), line);
  if (v == 1.0) return 1;
  if (v == -1.0) return -1;
  if (v == 0.0) return 0;
  throw ParseError(at_line("non-binary label", line), line);
}

// Maps 0 to -1 when the file uses a {0,1} encoding.
inline void canonicalize_labels(LabelVector& labels, const std::vector<std::size_t>& lines) {
  std::size_t first_zero = 0, first_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0 && first_zero == 0) first_zero = lines[i];
    if (labels[i] == -1 && first_neg == 0) first_neg = lines[i];
  }
  if (first_zero != 0 && first_neg != 0) {
    const std::size_t line = std::max(first_zero, first_neg);
    throw ParseError(at_line("mixed {0,1} and {-1,+1} label encodings", line), line);
  }
  for (int& y : labels)
    if (y == 0) y = -1;
}

inline Dataset parse_dense_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  LabelVector labels;
  std::vector<std::size_t> lines;
  std::string text;
  std::size_t line = 0, width = 0;
  while (std::getline(in, text)) {
    ++line;
    std::string_view sv = trim(text);
    if (sv.empty()) continue;
    std::vector<std::string_view> fields;
    for (std::size_t start = 0;;) {
      const std::size_t comma = sv.find(',', start);
      fields.push_back(sv.substr(start, comma == std::string_view::npos ? sv.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 2) throw ParseError(at_line("row needs at least one feature and a label", line), line);
    if (width == 0) width = fields.size();
    if (fields.size() != width) throw ParseError(at_line("inconsistent column count", line), line);
    std::vector<double> row(width - 1);
    for (std::size_t c = 0; c + 1 < width; ++c)
      if (!parse_double(fields[c], row[c]) || !std::isfinite(row[c]))
        throw ParseError(at_line("malformed feature value", line), line);
    labels.push_back(parse_label(fields.back(), line));
    rows.push_back(std::move(row));
    lines.push_back(line);
  }
  if (rows.empty()) throw ParseError("empty dataset", 0);
  canonicalize_labels(labels, lines);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c + 1 < width; ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return make_labelled_dataset(std::move(x), std::move(labels));
}

inline Dataset parse_svmlight(std::istream& in, std::size_t dimension) {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  LabelVector labels;
  std::vector<std::size_t> lines;
  std::string text;
  std::size_t line = 0, max_index = 0;
  while (std::getline(in, text)) {
    ++line;
    std::string_view sv = text;
    if (const auto hash = sv.find('#'); hash != sv.npos) sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    std::istringstream tokens{std::string(sv)};
    std::string token;
    tokens >> token;
    labels.push_back(parse_label(token, line));
    std::vector<std::pair<std::size_t, double>> entries;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) throw ParseError(at_line("malformed index:value pair", line), line);
      std::size_t idx = 0;
      const std::string_view key(token.data(), colon);
      const auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
      double v = 0.0;
      if (ec != std::errc() || p != key.data() + key.size() || idx == 0 ||
          !parse_double(std::string_view(token).substr(colon + 1), v) || !std::isfinite(v))
        throw ParseError(at_line("malformed index:value pair", line), line);
      if (dimension != 0 && idx > dimension)
        throw ParseError(at_line("feature index exceeds declared dimension", line), line);
      max_index = std::max(max_index, idx);
      entries.emplace_back(idx - 1, v);
    }
    rows.push_back(std::move(entries));
    lines.push_back(line);
  }
  if (rows.empty()) throw ParseError("empty dataset", 0);
  canonicalize_labels(labels, lines);
  const std::size_t width = dimension != 0 ? dimension : max_index;
  if (width == 0) throw ParseError("dataset has no features", 0);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                            static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (const auto& [c, v] : rows[r]) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
  return make_labelled_dataset(std::move(x), std::move(labels));
}

}  // namespace detail

/// Reads a fully labelled dataset from a stream. `dimension` is only used by
/// the svmlight reader (0 = infer from the largest index seen).
inline Dataset parse_dataset(std::istream& in, DataFormat format, std::size_t dimension = 0) {
  return format == DataFormat::dense_csv ? detail::parse_dense_csv(in)
                                         : detail::parse_svmlight(in, dimension);
}

inline Dataset load_dataset(const std::string& path, DataFormat format, std::size_t dimension = 0) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file '" + path + "'", 0);
  return parse_dataset(in, format, dimension);
}

}  // namespace lpoison
