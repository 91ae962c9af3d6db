#pragma once

// Static SVG plots, one set per (dataset, λ): gap vs epoch, gap vs time and
// variance vs epoch, log-scaled y, one series per method winner. Output
// depends only on the winners' records, so plots rebuilt from the CSVs match
// the ones drawn from memory byte for byte.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "vrbb/error.hpp"
#include "vrbb/harness/csv.hpp"
#include "vrbb/harness/experiment.hpp"

namespace vrbb::harness {

struct PlotOutput {
  std::vector<std::filesystem::path> files;
  std::string notice;  // set when nothing was drawn
};

struct Series {
  std::string label;
  std::vector<double> x, y;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  return colors[k % 8];
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Renders a log-y line chart. Points with y <= 0 or non-finite coordinates
/// are skipped; the axes cover every remaining point.
inline std::string render_svg(const std::string& title, const std::string& xlabel,
                              const std::string& ylabel, const std::vector<Series>& series) {
  const double W = 640, H = 440, left = 80, right = 170, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      if (!std::isfinite(s.x[j]) || !std::isfinite(s.y[j]) || !(s.y[j] > 0.0)) continue;
      xmin = std::min(xmin, s.x[j]);
      xmax = std::max(xmax, s.x[j]);
      ymin = std::min(ymin, std::log10(s.y[j]));
      ymax = std::max(ymax, std::log10(s.y[j]));
    }
  const bool empty = !std::isfinite(xmin);
  if (empty) {
    xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  }
  xmin = std::min(xmin, 0.0);
  if (xmax <= xmin) xmax = xmin + 1.0;
  ymin = std::floor(ymin);
  ymax = std::ceil(ymax);
  if (ymax <= ymin) ymax = ymin + 1.0;

  auto X = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto Y = [&](double ly) { return top + (ymax - ly) / (ymax - ymin) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(W) + "\" height=\"" +
       detail::num(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + detail::num(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
       detail::escape(title) + "</text>\n";
  o += "<rect x=\"" + detail::num(left) + "\" y=\"" + detail::num(top) + "\" width=\"" +
       detail::num(pw) + "\" height=\"" + detail::num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  // decade ticks on y, at most ~10 labels
  const int span = static_cast<int>(ymax - ymin);
  const int ystep = std::max(1, (span + 9) / 10);
  for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); e += ystep) {
    double py = Y(e);
    o += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(py) + "\" x2=\"" +
         detail::num(left + pw) + "\" y2=\"" + detail::num(py) + "\" stroke=\"#ddd\"/>\n";
    o += "<text x=\"" + detail::num(left - 6) + "\" y=\"" + detail::num(py + 4) +
         "\" text-anchor=\"end\">1e" + std::to_string(e) + "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    double xv = xmin + (xmax - xmin) * k / 5.0;
    double px = X(xv);
    o += "<line x1=\"" + detail::num(px) + "\" y1=\"" + detail::num(top + ph) + "\" x2=\"" +
         detail::num(px) + "\" y2=\"" + detail::num(top + ph + 5) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + detail::num(px) + "\" y=\"" + detail::num(top + ph + 18) +
         "\" text-anchor=\"middle\">" + detail::num(xv) + "</text>\n";
  }
  o += "<text x=\"" + detail::num(left + pw / 2) + "\" y=\"" + detail::num(H - 15) +
       "\" text-anchor=\"middle\">" + detail::escape(xlabel) + "</text>\n";
  o += "<text transform=\"translate(20," + detail::num(top + ph / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + detail::escape(ylabel) + "</text>\n";
  if (empty)
    o += "<text x=\"" + detail::num(left + pw / 2) + "\" y=\"" + detail::num(top + ph / 2) +
         "\" text-anchor=\"middle\">no positive finite values</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::string pts;
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      if (!std::isfinite(s.x[j]) || !std::isfinite(s.y[j]) || !(s.y[j] > 0.0)) continue;
      if (!pts.empty()) pts.push_back(' ');
      pts += detail::num(X(s.x[j])) + "," + detail::num(Y(std::log10(s.y[j])));
    }
    if (!pts.empty())
      o += "<polyline fill=\"none\" stroke=\"" + std::string(detail::palette(k)) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    double ly = top + 14 + 18.0 * static_cast<double>(k);
    o += "<line x1=\"" + detail::num(left + pw + 12) + "\" y1=\"" + detail::num(ly - 4) +
         "\" x2=\"" + detail::num(left + pw + 36) + "\" y2=\"" + detail::num(ly - 4) +
         "\" stroke=\"" + detail::palette(k) + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + detail::num(left + pw + 42) + "\" y=\"" + detail::num(ly) + "\">" +
         detail::escape(s.label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

/// Writes the three plots for every λ in the table's winners.
inline PlotOutput emit_plots(const ResultTable& table, const std::filesystem::path& dir) {
  PlotOutput out;
  std::map<double, std::vector<std::pair<Method, const RunRow*>>> by_lambda;
  for (const auto& [key, cell] : table.cells) {
    if (cell.skipped || cell.winner >= table.rows.size()) continue;
    by_lambda[key.lambda].emplace_back(key.method, &table.rows[cell.winner]);
  }
  if (by_lambda.empty()) {
    out.notice = "no method winners to plot; no files written";
    return out;
  }
  std::filesystem::create_directories(dir);
  for (const auto& [lambda, winners] : by_lambda) {
    std::vector<Series> gap_epoch, gap_time, var_epoch;
    for (const auto& [method, row] : winners) {
      std::string label = vrbb::to_string(method) + " (" + to_string(row->step_kind) + "=" +
                          detail::num(row->step_param) + ")";
      Series ge{label, {}, {}}, gt{label, {}, {}}, ve{label, {}, {}};
      for (const auto& r : row->records) {
        ge.x.push_back(static_cast<double>(r.epoch));
        ge.y.push_back(r.gap);
        gt.x.push_back(r.wall_time_sec);
        gt.y.push_back(r.gap);
        ve.x.push_back(static_cast<double>(r.epoch));
        ve.y.push_back(r.variance);
      }
      gap_epoch.push_back(std::move(ge));
      gap_time.push_back(std::move(gt));
      var_epoch.push_back(std::move(ve));
    }
    const std::string title = table.dataset + ", " + vrbb::to_string(table.model) +
                              ", lambda=" + detail::num(lambda);
    const std::string stem = table.dataset + "_" + vrbb::to_string(table.model) + "_lam" +
                             detail::num(lambda);
    struct Item {
      const char* suffix;
      const char* xlabel;
      const char* ylabel;
      const std::vector<Series>* s;
    };
    for (const Item& it : {Item{"gap_epoch", "epoch", "optimality gap", &gap_epoch},
                           Item{"gap_time", "time (s)", "optimality gap", &gap_time},
                           Item{"variance_epoch", "epoch", "variance", &var_epoch}}) {
      auto path = dir / (stem + "_" + it.suffix + ".svg");
      detail::write_file(path, render_svg(title, it.xlabel, it.ylabel, *it.s));
      out.files.push_back(path);
    }
  }
  return out;
}

}  // namespace vrbb::harness
