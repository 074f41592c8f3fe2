#pragma once

// Text tables, CSV and SVG ratio charts for comparison reports.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "pagescope/experiment.hpp"
#include "pagescope/metrics.hpp"

namespace pagescope {

// Without/With table for one region. Labels follow measure_label() except
// the timer row, whose label is supplied by the caller.
inline std::string render_comparison_table(std::string_view title, std::span<const RatioRow> rows,
                                           std::string_view timer_label) {
  struct Line {
    std::string label, without, with;
  };
  std::vector<Line> lines;
  for (const auto& row : rows) {
    std::string label =
        row.measure == Measure::ElapsedTimer ? std::string(timer_label) : std::string(measure_label(row.measure));
    lines.push_back({std::move(label), format_measure(row.measure, row.without_hp),
                     format_measure(row.measure, row.with_hp)});
  }
  // Column widths are in code points; "×" is two bytes of UTF-8.
  auto width = [](std::string_view s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80 ? 1 : 0;
    return w;
  };
  auto pad = [&](const std::string& s, std::size_t w) { return s + std::string(w - width(s), ' '); };

  std::size_t w0 = width("Measure"), w1 = width("Without HPs"), w2 = width("With HPs");
  for (const auto& l : lines) {
    w0 = std::max(w0, width(l.label));
    w1 = std::max(w1, width(l.without));
    w2 = std::max(w2, width(l.with));
  }
  const auto rule = fmt::format("+{}+{}+{}+\n", std::string(w0 + 2, '-'), std::string(w1 + 2, '-'),
                                std::string(w2 + 2, '-'));
  std::string out = std::string(title) + "\n" + rule;
  out += fmt::format("| {} | {} | {} |\n", pad("Measure", w0), pad("Without HPs", w1), pad("With HPs", w2));
  out += rule;
  for (const auto& l : lines) {
    out += fmt::format("| {} | {} | {} |\n", pad(l.label, w0), pad(l.without, w1), pad(l.with, w2));
  }
  out += rule;
  return out;
}

inline std::string describe_verdict(const UsageVerdict& v) {
  std::string out(verdict_name(v.kind));
  if (v.kind == UsageVerdict::Kind::Active) {
    std::vector<std::string> parts;
    for (const auto& e : v.evidence) parts.push_back(fmt::format("{} +{}", e.field, e.delta));
    out += " (";
    for (std::size_t n = 0; n < parts.size(); ++n) out += (n ? ", " : "") + parts[n];
    out += ")";
  } else if (v.kind == UsageVerdict::Kind::Indeterminate) {
    out += " (" + v.reason + ")";
  }
  return out;
}

inline std::string render_table(const ComparisonReport& report) {
  std::string out;
  for (const auto& region : report.regions) {
    auto name = region.name.empty() ? std::string("(unnamed region)") : region.name;
    out += render_comparison_table(fmt::format("Region: {}", name), region.rows, report.timer_label);
    for (const auto& flag : region.flags) out += fmt::format("  ! {}\n", flag);
  }
  for (const auto& run : report.runs) {
    out += fmt::format("huge pages [{}]: {}{}\n", mode_name(run.mode), describe_verdict(run.verdict),
                       run.counters_simulated ? "  [simulated counters]" : "");
    for (const auto& note : run.notes) out += fmt::format("  note: {}\n", note);
  }
  if (report.treatment_verdict_mismatch) {
    out += fmt::format("warning: treatment mode '{}' did not show huge page use\n", mode_name(report.treatment));
  }
  if (report.failure) out += fmt::format("workload failed in mode '{}': {}\n", mode_name(report.failure->mode),
                                         report.failure->message);
  return out;
}

// Full-precision rows: region,measure,without_hp,with_hp,ratio.
inline std::string render_csv(const ComparisonReport& report) {
  std::string out = "region,measure,without_hp,with_hp,ratio\n";
  for (const auto& region : report.regions) {
    for (const auto& row : region.rows) {
      out += fmt::format("{},{},{},{},{}\n", region.name, measure_key(row.measure), format_full(row.without_hp),
                         format_full(row.with_hp), format_full(row.ratio));
    }
  }
  return out;
}

// --- ratio chart --------------------------------------------------------------

struct ChartCase {
  std::string label;
  std::vector<RatioRow> rows;
};

struct ChartDocument {
  std::string svg;
  std::string csv;
};

// One case per compared region. Single-region reports are labeled by their
// case name alone.
inline std::vector<ChartCase> chart_cases(std::span<const ComparisonReport> reports) {
  std::vector<ChartCase> cases;
  for (const auto& r : reports) {
    for (const auto& region : r.regions) {
      auto label = r.regions.size() == 1 ? r.case_label : fmt::format("{}/{}", r.case_label, region.name);
      cases.push_back({label.empty() ? region.name : label, region.rows});
    }
  }
  return cases;
}

// The string written to both the CSV and the bar's data-ratio attribute.
inline std::string chart_value(double ratio) { return fmt::format("{:.6g}", ratio); }

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

// Grouped bar chart: one group per measure, one bar per case, and a dashed
// guide at ratio 1. Unavailable ratios get no bar and "n/a" in the CSV.
inline ChartDocument render_ratio_chart(std::span<const ChartCase> cases) {
  static constexpr std::array<std::string_view, 6> kPalette = {"#1f4e9c", "#c62828", "#2e7d32",
                                                               "#ef6c00", "#6a1b9a", "#00838f"};
  std::vector<Measure> measures;
  for (auto m : kAllMeasures) {
    bool any = std::any_of(cases.begin(), cases.end(), [m](const ChartCase& c) {
      return std::any_of(c.rows.begin(), c.rows.end(), [m](const RatioRow& r) { return r.measure == m; });
    });
    if (any) measures.push_back(m);
  }

  ChartDocument doc;
  doc.csv = "measure,case,ratio\n";
  double max_ratio = 1.0;
  struct Bar {
    std::size_t group, slot;
    std::string value;
    double height;
  };
  std::vector<Bar> bars;
  for (std::size_t g = 0; g < measures.size(); ++g) {
    for (std::size_t c = 0; c < cases.size(); ++c) {
      auto it = std::find_if(cases[c].rows.begin(), cases[c].rows.end(),
                             [&](const RatioRow& r) { return r.measure == measures[g]; });
      if (it == cases[c].rows.end()) continue;
      std::string value = it->ratio && std::isfinite(*it->ratio) ? chart_value(*it->ratio) : std::string(kNotAvailable);
      doc.csv += fmt::format("{},{},{}\n", measure_key(measures[g]), detail::csv_field(cases[c].label), value);
      if (value == kNotAvailable) continue;
      double printed = std::strtod(value.c_str(), nullptr);
      max_ratio = std::max(max_ratio, printed);
      bars.push_back({g, c, value, printed});
    }
  }

  const double y_max = std::ceil(max_ratio * 1.1 * 4.0) / 4.0;  // round up to a 0.25 step
  const double left = 70, top = 40, plot_h = 280;
  const double bar_w = 22, group_gap = 30;
  const double group_w = std::max<double>(1, cases.size()) * bar_w + group_gap;
  const double plot_w = std::max(200.0, group_w * measures.size() + group_gap);
  const double width = left + plot_w + 180, height = top + plot_h + 110;
  auto y_of = [&](double v) { return top + plot_h - v / y_max * plot_h; };

  std::string& s = doc.svg;
  s += fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">)",
                   width, height);
  s += "\n";
  s += R"(<style>text{font-family:sans-serif;font-size:12px}</style>)";
  s += "\n";
  s += fmt::format(R"(<text x="{}" y="20" text-anchor="middle">Ratio with / without huge pages</text>)",
                   left + plot_w / 2);
  s += "\n";
  // axes
  s += fmt::format(R"(<line class="axis" x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/>)", left, top,
                   top + plot_h);
  s += "\n";
  s += fmt::format(R"(<line class="axis" x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/>)", left, top + plot_h,
                   left + plot_w);
  s += "\n";
  for (double t = 0.0; t <= y_max + 1e-9; t += 0.25) {
    s += fmt::format(R"(<text x="{}" y="{}" text-anchor="end">{:.2f}</text>)", left - 6, y_of(t) + 4, t);
    s += "\n";
  }
  // guide at 1
  s += fmt::format(R"(<line class="guide" x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="gray" stroke-dasharray="6,4"/>)",
                   left, y_of(1.0), left + plot_w);
  s += "\n";
  for (const auto& b : bars) {
    const double x = left + group_gap + b.group * group_w + b.slot * bar_w;
    const double y = y_of(b.height);
    s += fmt::format(
        R"(<rect class="bar" x="{}" y="{}" width="{}" height="{}" fill="{}" data-case="{}" data-measure="{}" data-ratio="{}"/>)",
        x, y, bar_w - 2, top + plot_h - y, kPalette[b.slot % kPalette.size()],
        detail::xml_escape(cases[b.slot].label), measure_key(measures[b.group]), b.value);
    s += "\n";
  }
  for (std::size_t g = 0; g < measures.size(); ++g) {
    const double cx = left + group_gap + g * group_w + (cases.size() * bar_w) / 2.0;
    s += fmt::format(R"~(<text x="{}" y="{}" text-anchor="end" transform="rotate(-30 {} {})">{}</text>)~", cx,
                     top + plot_h + 16, cx, top + plot_h + 16, detail::xml_escape(measure_label(measures[g])));
    s += "\n";
  }
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const double ly = top + 10 + c * 18;
    s += fmt::format(R"(<rect x="{}" y="{}" width="12" height="12" fill="{}"/>)", left + plot_w + 20, ly,
                     kPalette[c % kPalette.size()]);
    s += fmt::format(R"(<text x="{}" y="{}">{}</text>)", left + plot_w + 38, ly + 10,
                     detail::xml_escape(cases[c].label));
    s += "\n";
  }
  s += "</svg>\n";
  return doc;
}

inline ChartDocument render_ratio_chart(std::span<const ComparisonReport> reports) {
  auto cases = chart_cases(reports);
  return render_ratio_chart(std::span<const ChartCase>(cases));
}

}  // namespace pagescope
