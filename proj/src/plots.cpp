#include "fogrl/plots.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fogrl/io_util.hpp"

namespace fogrl {

namespace {

constexpr double kWidth = 880.0;
constexpr double kHeight = 420.0;
constexpr double kMarginL = 64.0;
constexpr double kMarginR = 16.0;
constexpr double kMarginT = 28.0;
constexpr double kMarginB = 44.0;

std::string svg_open() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(kWidth) +
         "\" height=\"" + format_double(kHeight) + "\" viewBox=\"0 0 " + format_double(kWidth) +
         " " + format_double(kHeight) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text_at(double x, double y, const std::string& s, const std::string& anchor = "start",
                    int size = 13) {
  return "<text x=\"" + format_double(x) + "\" y=\"" + format_double(y) + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + s + "</text>\n";
}

std::string placeholder_svg(const std::string& notice) {
  return svg_open() + text_at(kWidth / 2, kHeight / 2, notice, "middle", 16) + "</svg>\n";
}

struct Scale {
  double lo, hi, px0, px1;
  double operator()(double v) const {
    if (hi == lo) return (px0 + px1) / 2.0;
    return px0 + (v - lo) / (hi - lo) * (px1 - px0);
  }
};

std::string polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                     double width) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
                  format_double(width) + "\" points=\"";
  for (const auto& [x, y] : pts) {
    s += format_double(x);
    s += ',';
    s += format_double(y);
    s += ' ';
  }
  s += "\"/>\n";
  return s;
}

std::string axes(const Scale& sx, const Scale& sy, const std::string& x_label,
                 const std::string& y_label) {
  std::string s;
  s += "<line x1=\"" + format_double(sx.px0) + "\" y1=\"" + format_double(sy.px1) + "\" x2=\"" +
       format_double(sx.px1) + "\" y2=\"" + format_double(sy.px1) +
       "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  s += "<line x1=\"" + format_double(sx.px0) + "\" y1=\"" + format_double(sy.px0) + "\" x2=\"" +
       format_double(sx.px0) + "\" y2=\"" + format_double(sy.px1) +
       "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  s += text_at((sx.px0 + sx.px1) / 2, kHeight - 10, x_label, "middle");
  s += text_at(14, kMarginT - 8, y_label);
  s += text_at(sx.px0, kHeight - 26, format_double(sx.lo), "middle", 11);
  s += text_at(sx.px1, kHeight - 26, format_double(sx.hi), "middle", 11);
  s += text_at(sx.px0 - 6, sy.px1 + 4, format_double(sy.lo), "end", 11);
  s += text_at(sx.px0 - 6, sy.px0 + 4, format_double(sy.hi), "end", 11);
  return s;
}

}  // namespace

std::string learning_curve_svg(const LearningCurve& curve) {
  if (curve.empty()) return placeholder_svg("learning curve: no episodes recorded");

  double lo = curve[0].total_return, hi = lo;
  for (const CurvePoint& p : curve) {
    lo = std::min(lo, p.total_return);
    hi = std::max(hi, p.total_return);
  }
  if (lo == hi) {
    lo -= 1.0;
    hi += 1.0;
  }
  const Scale sx{1.0, static_cast<double>(curve.back().episode), kMarginL, kWidth - kMarginR};
  const Scale sy{lo, hi, kHeight - kMarginB, kMarginT};  // px grows downward

  std::vector<std::pair<double, double>> returns, moving;
  double window_sum = 0.0;
  std::vector<double> window;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double e = static_cast<double>(curve[i].episode);
    returns.emplace_back(sx(e), sy(curve[i].total_return));
    window.push_back(curve[i].total_return);
    window_sum += curve[i].total_return;
    if (window.size() > 100) {
      window_sum -= window[window.size() - 101];
    }
    const std::size_t n = std::min<std::size_t>(window.size(), 100);
    moving.emplace_back(sx(e), sy(window_sum / static_cast<double>(n)));
  }

  std::string svg = svg_open();
  svg += text_at(kMarginL, 18, "Per-episode return with 100-episode moving average");
  svg += axes(sx, sy, "episode", "return");
  svg += polyline(returns, "#9ecae1", 1.0);
  svg += polyline(moving, "#08519c", 2.0);
  svg += "</svg>\n";
  return svg;
}

namespace {

struct BoxStats {
  double lo, q1, median, q3, hi;
};

double quantile(std::vector<double> sorted, double q) {
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (i + 1 < sorted.size()) return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
  return sorted[i];
}

BoxStats box_stats(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return {v.front(), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75), v.back()};
}

std::string draw_box(const BoxStats& b, double cx, const Scale& sy, const std::string& color) {
  const double half = 48.0;
  std::string s;
  auto line = [&](double x1, double y1, double x2, double y2, double w) {
    s += "<line x1=\"" + format_double(x1) + "\" y1=\"" + format_double(y1) + "\" x2=\"" +
         format_double(x2) + "\" y2=\"" + format_double(y2) + "\" stroke=\"black\" stroke-width=\"" +
         format_double(w) + "\"/>\n";
  };
  // whiskers
  line(cx, sy(b.lo), cx, sy(b.q1), 1.0);
  line(cx, sy(b.q3), cx, sy(b.hi), 1.0);
  line(cx - half / 2, sy(b.lo), cx + half / 2, sy(b.lo), 1.0);
  line(cx - half / 2, sy(b.hi), cx + half / 2, sy(b.hi), 1.0);
  // box
  s += "<rect x=\"" + format_double(cx - half) + "\" y=\"" + format_double(sy(b.q3)) +
       "\" width=\"" + format_double(2 * half) + "\" height=\"" +
       format_double(sy(b.q1) - sy(b.q3)) + "\" fill=\"" + color +
       "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  line(cx - half, sy(b.median), cx + half, sy(b.median), 2.0);
  return s;
}

}  // namespace

std::string horizon_boxplot_svg(std::span<const double> dependent,
                                std::span<const double> independent) {
  if (dependent.empty() && independent.empty())
    return placeholder_svg("horizon comparison: no prediction horizons recorded");

  double lo = 0.0, hi = 1.0;
  bool first = true;
  for (auto values : {dependent, independent}) {
    for (double v : values) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  if (lo == hi) {
    lo -= 1.0;
    hi += 1.0;
  }
  const Scale sy{lo, hi, kHeight - kMarginB, kMarginT};

  std::string svg = svg_open();
  svg += text_at(kMarginL, 18, "Longest prediction horizon by evaluation mode");
  svg += "<line x1=\"" + format_double(kMarginL) + "\" y1=\"" + format_double(sy.px0) +
         "\" x2=\"" + format_double(kMarginL) + "\" y2=\"" + format_double(sy.px1) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += text_at(kMarginL - 6, sy.px0 + 4, format_double(lo), "end", 11);
  svg += text_at(kMarginL - 6, sy.px1 + 4, format_double(hi), "end", 11);
  svg += text_at(14, kMarginT - 8, "seconds");

  const double cx_dep = kWidth * 0.35;
  const double cx_ind = kWidth * 0.7;
  if (!dependent.empty()) {
    svg += draw_box(box_stats(dependent), cx_dep, sy, "#c6dbef");
    svg += text_at(cx_dep, kHeight - 14, "subject dependent", "middle");
  } else {
    svg += text_at(cx_dep, kHeight / 2, "no dependent horizons", "middle");
  }
  if (!independent.empty()) {
    svg += draw_box(box_stats(independent), cx_ind, sy, "#fdd0a2");
    svg += text_at(cx_ind, kHeight - 14, "subject independent", "middle");
  } else {
    svg += text_at(cx_ind, kHeight / 2, "no independent horizons", "middle");
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace fogrl
