#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "lpoison/error.hpp"
#include "lpoison/stats.hpp"

namespace lpoison::harness {

/// Placeholder for columns that do not apply to a row.
inline constexpr const char* kNotApplicable = "na";

struct ReportRow {
  std::string rq;
  std::string dataset;
  std::uint64_t seed = 0;
  double labelled_fraction = 0.0;
  std::string ssl_algo = kNotApplicable;
  std::string learner = kNotApplicable;
  std::string attack_method = kNotApplicable;
  double budget = 0.0;
  std::string arm = kNotApplicable;
  std::string metric_name;
  /// Empty when the metric is undefined (e.g. a degenerate correlation).
  std::optional<double> value;
  double duration_s = 0.0;
  /// Wall-clock measurement; kept out of the deterministic report.
  bool timing = false;
};

using Report = std::vector<ReportRow>;

inline const char* kReportHeader =
    "rq,dataset,seed,labelled_fraction,ssl_algo,learner,attack_method,budget,arm,metric_name,value,duration_s";

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline auto row_key(const ReportRow& r) {
  return std::tie(r.rq, r.seed, r.labelled_fraction, r.ssl_algo, r.learner, r.attack_method, r.budget, r.arm,
                  r.metric_name);
}

inline void sort_report(Report& report) {
  std::stable_sort(report.begin(), report.end(),
                   [](const ReportRow& a, const ReportRow& b) { return row_key(a) < row_key(b); });
}

/// Writes rows with `timing == with_timings`. The deterministic report leaves
/// duration_s empty.
inline void write_report_csv(std::ostream& out, const Report& report, bool with_timings = false) {
  out << kReportHeader << '\n';
  for (const ReportRow& r : report) {
    if (r.timing != with_timings) continue;
    out << r.rq << ',' << r.dataset << ',' << r.seed << ',' << format_number(r.labelled_fraction) << ','
        << r.ssl_algo << ',' << r.learner << ',' << r.attack_method << ',' << format_number(r.budget) << ','
        << r.arm << ',' << r.metric_name << ',' << (r.value ? format_number(*r.value) : "degenerate") << ','
        << (with_timings ? format_number(r.duration_s) : "") << '\n';
  }
}

inline Report read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("report: empty file", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kReportHeader) throw ParseError("report: unexpected header", 1);
  Report out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 12) throw ParseError("report: expected 12 columns at line " + std::to_string(n), n);
    try {
      ReportRow r;
      r.rq = f[0];
      r.dataset = f[1];
      r.seed = std::stoull(f[2]);
      r.labelled_fraction = std::stod(f[3]);
      r.ssl_algo = f[4];
      r.learner = f[5];
      r.attack_method = f[6];
      r.budget = std::stod(f[7]);
      r.arm = f[8];
      r.metric_name = f[9];
      if (f[10] != "degenerate") r.value = std::stod(f[10]);
      if (!f[11].empty()) {
        r.duration_s = std::stod(f[11]);
        r.timing = true;
      }
      out.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ParseError("report: malformed number at line " + std::to_string(n), n);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation across seeds.

struct SummaryRow {
  ReportRow key;  // seed and value are not meaningful
  stats::Summary summary;
  std::size_t degenerate = 0;
};

/// Groups rows by every provenance column except the seed and summarizes the
/// defined values of each group. Groups with no defined value are kept with a
/// zero count.
inline std::vector<SummaryRow> aggregate(const Report& report) {
  if (report.empty()) throw ValidationError("aggregate: no rows");
  std::map<std::tuple<std::string, std::string, double, std::string, std::string, std::string, double,
                      std::string, std::string, bool>,
           std::pair<ReportRow, std::vector<double>>>
      groups;
  std::map<decltype(groups)::key_type, std::size_t> degenerate;
  for (const ReportRow& r : report) {
    auto key = std::make_tuple(r.rq, r.dataset, r.labelled_fraction, r.ssl_algo, r.learner, r.attack_method,
                               r.budget, r.arm, r.metric_name, r.timing);
    auto it = groups.try_emplace(key, r, std::vector<double>{}).first;
    if (r.value) it->second.second.push_back(*r.value);
    else ++degenerate[key];
  }
  std::vector<SummaryRow> out;
  for (auto& [key, g] : groups) {
    SummaryRow s;
    s.key = g.first;
    s.key.seed = 0;
    s.degenerate = degenerate.count(key) ? degenerate[key] : 0;
    if (!g.second.empty()) s.summary = stats::summarize(g.second);
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "rq,dataset,labelled_fraction,ssl_algo,learner,attack_method,budget,arm,metric_name,"
         "count,degenerate,mean,median,std,min,max\n";
  for (const SummaryRow& s : rows) {
    const ReportRow& r = s.key;
    out << r.rq << ',' << r.dataset << ',' << format_number(r.labelled_fraction) << ',' << r.ssl_algo << ','
        << r.learner << ',' << r.attack_method << ',' << format_number(r.budget) << ',' << r.arm << ','
        << r.metric_name << ',' << s.summary.count << ',' << s.degenerate;
    if (s.summary.count == 0) {
      out << ",,,,,\n";
      continue;
    }
    out << ',' << format_number(s.summary.mean) << ',' << format_number(s.summary.median) << ','
        << format_number(s.summary.stddev) << ',' << format_number(s.summary.min) << ','
        << format_number(s.summary.max) << '\n';
  }
}

}  // namespace lpoison::harness
