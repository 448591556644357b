#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lpoison/error.hpp"
#include "lpoison/harness/report.hpp"
#include "lpoison/stats.hpp"

namespace lpoison::harness {

enum class PlotKind { error_vs_budget, correlation_bar };

inline PlotKind parse_plot_kind(std::string_view s) {
  if (s == "error_vs_budget") return PlotKind::error_vs_budget;
  if (s == "correlation_bar") return PlotKind::correlation_bar;
  throw ValidationError("unknown plot kind '" + std::string(s) + "'");
}

struct PlotPoint {
  std::string series;
  double x = 0.0;         // budget (error_vs_budget) or bar position
  std::string x_label;    // bar label (correlation_bar)
  double y = 0.0;
};

/// Median over seeds of the error metrics, one series per
/// (ssl_algo, learner, labelled_fraction, attack_method). RQ4 arm rows are
/// ignored.
inline std::vector<PlotPoint> error_vs_budget_points(const Report& report) {
  std::map<std::pair<std::string, double>, std::vector<double>> cells;
  for (const ReportRow& r : report) {
    if (r.timing || !r.value || r.arm != kNotApplicable) continue;
    if (r.metric_name != "transductive_error" && r.metric_name != "inductive_error") continue;
    const std::string learner = r.learner == kNotApplicable ? "transductive" : r.learner;
    const std::string series =
        r.ssl_algo + "/" + learner + "/l=" + format_number(r.labelled_fraction) + "/" + r.attack_method;
    cells[{series, r.budget}].push_back(*r.value);
  }
  std::vector<PlotPoint> out;
  for (const auto& [key, values] : cells) out.push_back({key.first, key.second, "", stats::median(values)});
  return out;
}

/// Mean of the defined correlation values per (ssl_algo, labelled_fraction,
/// metric).
inline std::vector<PlotPoint> correlation_points(const Report& report) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> cells;
  for (const ReportRow& r : report) {
    if (r.timing || !r.value) continue;
    if (r.metric_name != "kendall_tau" && r.metric_name != "pearson_r") continue;
    cells[{r.metric_name, r.ssl_algo + " l=" + format_number(r.labelled_fraction)}].push_back(*r.value);
  }
  std::vector<PlotPoint> out;
  std::map<std::string, double> position;
  for (const auto& [key, values] : cells) {
    const auto [it, inserted] = position.try_emplace(key.second, static_cast<double>(position.size()));
    out.push_back({key.first, it->second, key.second, stats::summarize(values).mean});
  }
  return out;
}

inline void write_plot_csv(std::ostream& out, const std::vector<PlotPoint>& points, PlotKind kind) {
  out << (kind == PlotKind::error_vs_budget ? "series,budget,median_error\n" : "series,group,mean_value\n");
  for (const PlotPoint& p : points) {
    out << p.series << ',';
    if (kind == PlotKind::error_vs_budget) out << format_number(p.x);
    else out << p.x_label;
    out << ',' << format_number(p.y) << '\n';
  }
}

namespace detail {

inline const char* palette(std::size_t i) {
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colours[i % 10];
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace detail

inline void write_plot_svg(std::ostream& out, const std::vector<PlotPoint>& points, PlotKind kind) {
  constexpr double width = 760, height = 440, left = 70, right = 230, top = 30, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;

  std::vector<std::string> series;
  for (const auto& p : points)
    if (std::find(series.begin(), series.end(), p.series) == series.end()) series.push_back(p.series);

  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (kind == PlotKind::error_vs_budget) {
    xmax = 0.0;
    ymax = 0.0;
    for (const auto& p : points) {
      xmax = std::max(xmax, p.x);
      ymax = std::max(ymax, p.y);
    }
    if (xmax <= 0.0) xmax = 1.0;
    ymax = ymax <= 0.0 ? 1.0 : std::min(1.0, ymax * 1.1);
  } else {
    ymin = -1.0;
    double groups = 0.0;
    for (const auto& p : points) groups = std::max(groups, p.x + 1.0);
    xmax = std::max(groups, 1.0);
  }
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
  auto sy = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = ymin + (ymax - ymin) * t / 4.0;
    out << "<text x=\"" << left - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << format_number(y)
        << "</text>\n";
  }
  const char* xlabel = kind == PlotKind::error_vs_budget ? "poison budget (fraction of labelled inputs)"
                                                         : "algorithm / labelled fraction";
  const char* ylabel = kind == PlotKind::error_vs_budget ? "error rate" : "correlation";
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">" << xlabel
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << top + plot_h / 2 << ")\">" << ylabel << "</text>\n";

  if (kind == PlotKind::error_vs_budget) {
    for (int t = 0; t <= 4; ++t) {
      const double x = xmax * t / 4.0;
      out << "<text x=\"" << sx(x) << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">"
          << format_number(x) << "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& p : points)
        if (p.series == series[s]) pts.emplace_back(p.x, p.y);
      std::sort(pts.begin(), pts.end());
      out << "<polyline fill=\"none\" stroke=\"" << detail::palette(s) << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i)
        out << (i ? " " : "") << format_number(sx(pts[i].first)) << ',' << format_number(sy(pts[i].second));
      out << "\"/>\n";
    }
  } else {
    out << "<line x1=\"" << left << "\" y1=\"" << sy(0.0) << "\" x2=\"" << left + plot_w << "\" y2=\"" << sy(0.0)
        << "\" stroke=\"#888\"/>\n";
    const double bar_w = plot_w / (xmax - xmin) / (static_cast<double>(series.size()) + 1.0);
    std::map<double, std::string> labels;
    for (const auto& p : points) {
      const auto s = static_cast<std::size_t>(std::find(series.begin(), series.end(), p.series) - series.begin());
      const double x0 = sx(p.x) + bar_w * (0.5 + static_cast<double>(s));
      const double y0 = sy(std::max(p.y, 0.0));
      const double h = std::abs(sy(p.y) - sy(0.0));
      out << "<rect x=\"" << format_number(x0) << "\" y=\"" << format_number(y0) << "\" width=\""
          << format_number(bar_w) << "\" height=\"" << format_number(h) << "\" fill=\"" << detail::palette(s)
          << "\"/>\n";
      labels[p.x] = p.x_label;
    }
    for (const auto& [x, label] : labels)
      out << "<text x=\"" << sx(x + 0.5) << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">"
          << detail::escape(label) << "</text>\n";
  }

  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = top + 10 + 16.0 * static_cast<double>(s);
    out << "<rect x=\"" << left + plot_w + 12 << "\" y=\"" << y - 8 << "\" width=\"10\" height=\"10\" fill=\""
        << detail::palette(s) << "\"/>\n";
    out << "<text x=\"" << left + plot_w + 28 << "\" y=\"" << y + 1 << "\">" << detail::escape(series[s])
        << "</text>\n";
  }
  out << "</svg>\n";
}

/// Writes <stem>.csv and <stem>.svg into `dir`; returns the plotted points.
inline std::vector<PlotPoint> emit_plot(const Report& report, PlotKind kind, const std::filesystem::path& dir,
                                        const std::string& stem) {
  if (report.empty()) throw ValidationError("no rows for plot");
  const std::vector<PlotPoint> points =
      kind == PlotKind::error_vs_budget ? error_vs_budget_points(report) : correlation_points(report);
  if (points.empty()) throw ValidationError("no rows for plot");
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / (stem + ".csv"));
    write_plot_csv(csv, points, kind);
  }
  std::ofstream svg(dir / (stem + ".svg"));
  write_plot_svg(svg, points, kind);
  return points;
}

}  // namespace lpoison::harness
