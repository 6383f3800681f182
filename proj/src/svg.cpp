#include "flusense/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flusense/error.hpp"

namespace flusense::svg {

namespace {

constexpr double kWidth = 720, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 70;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

// Fixed precision keeps the output byte-stable.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::fabs(v) < 0.005 ? 0.0 : v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::fabs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

struct Range {
  double lo = 0.0, hi = 1.0;
};

Range value_range(const std::vector<Series>& series, bool include_zero) {
  double lo = include_zero ? 0.0 : INFINITY, hi = include_zero ? 0.0 : -INFINITY;
  for (const auto& s : series) {
    for (const auto& v : s.values) {
      if (v && std::isfinite(*v)) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
    }
  }
  if (!std::isfinite(lo)) return {};
  if (hi - lo < 1e-12) {
    hi += 1.0;
    if (!include_zero) lo -= 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo < 0.0 || !include_zero ? lo - pad : lo, hi + pad};
}

class Canvas {
 public:
  Canvas(const std::string& title, const std::string& y_label, Range range) : range_(range) {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
         << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n"
         << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
         << "\" fill=\"white\"/>\n"
         << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         << "font-size=\"16\">" << escape(title) << "</text>\n"
         << "<text x=\"16\" y=\"" << num(kTop + plot_h() / 2) << "\" transform=\"rotate(-90 16 "
         << num(kTop + plot_h() / 2) << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
         << escape(y_label) << "</text>\n";
    for (int i = 0; i <= 4; ++i) {
      const double v = range_.lo + (range_.hi - range_.lo) * i / 4.0;
      out_ << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y(v)) << "\" x2=\"" << num(kLeft + plot_w())
           << "\" y2=\"" << num(y(v)) << "\" stroke=\"#dddddd\"/>\n"
           << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y(v) + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick(v) << "</text>\n";
    }
    out_ << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
         << num(kTop + plot_h()) << "\" stroke=\"black\"/>\n";
  }

  static double plot_w() { return kWidth - kLeft - kRight; }
  static double plot_h() { return kHeight - kTop - kBottom; }
  double y(double v) const { return kTop + plot_h() * (1.0 - (v - range_.lo) / (range_.hi - range_.lo)); }

  void x_label(double x, const std::string& text) {
    out_ << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + plot_h() + 16)
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << escape(text) << "</text>\n";
  }

  void legend(const std::vector<Series>& series) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      const double ly = kTop + 10 + 20.0 * static_cast<double>(i);
      out_ << "<rect x=\"" << num(kWidth - kRight + 16) << "\" y=\"" << num(ly - 9) << "\" width=\"12\" height=\"12\" "
           << "fill=\"" << kPalette[i % 6] << "\"/>\n"
           << "<text x=\"" << num(kWidth - kRight + 34) << "\" y=\"" << num(ly + 2)
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(series[i].name) << "</text>\n";
    }
  }

  std::ostringstream& out() { return out_; }
  std::string finish() {
    const double base = y(std::clamp(0.0, range_.lo, range_.hi));
    out_ << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(base) << "\" x2=\"" << num(kLeft + plot_w())
         << "\" y2=\"" << num(base) << "\" stroke=\"black\"/>\n</svg>\n";
    return out_.str();
  }

 private:
  Range range_;
  std::ostringstream out_;
};

}  // namespace

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render(const BarChart& chart) {
  Canvas canvas(chart.title, chart.y_label, value_range(chart.series, true));
  const std::size_t groups = std::max<std::size_t>(chart.categories.size(), 1);
  const double group_w = Canvas::plot_w() / static_cast<double>(groups);
  const double bar_w = 0.8 * group_w / static_cast<double>(std::max<std::size_t>(chart.series.size(), 1));
  const double zero = canvas.y(0.0);
  for (std::size_t g = 0; g < chart.categories.size(); ++g) {
    const double gx = kLeft + group_w * static_cast<double>(g);
    for (std::size_t s = 0; s < chart.series.size(); ++s) {
      const auto& values = chart.series[s].values;
      if (g >= values.size() || !values[g] || !std::isfinite(*values[g])) continue;
      const double vy = canvas.y(*values[g]);
      canvas.out() << "<rect x=\"" << num(gx + 0.1 * group_w + bar_w * static_cast<double>(s)) << "\" y=\""
                   << num(std::min(vy, zero)) << "\" width=\"" << num(bar_w) << "\" height=\""
                   << num(std::fabs(zero - vy)) << "\" fill=\"" << kPalette[s % 6] << "\"/>\n";
    }
    canvas.x_label(gx + group_w / 2, chart.categories[g]);
  }
  canvas.legend(chart.series);
  return canvas.finish();
}

std::string render(const LineChart& chart) {
  Canvas canvas(chart.title, chart.y_label, value_range(chart.series, false));
  const std::size_t n = chart.x_labels.size();
  auto x_at = [&](std::size_t i) {
    return n <= 1 ? kLeft + Canvas::plot_w() / 2
                  : kLeft + Canvas::plot_w() * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& values = chart.series[s].values;
    std::string path;
    bool pen_down = false;
    for (std::size_t i = 0; i < std::min(n, values.size()); ++i) {
      if (!values[i] || !std::isfinite(*values[i])) {
        pen_down = false;
        continue;
      }
      path += (pen_down ? " L " : (path.empty() ? "M " : " M ")) + num(x_at(i)) + ' ' + num(canvas.y(*values[i]));
      pen_down = true;
    }
    if (!path.empty()) {
      canvas.out() << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << kPalette[s % 6]
                   << "\" stroke-width=\"2\"/>\n";
    }
  }
  const std::size_t step = std::max<std::size_t>(1, (n + 9) / 10);
  for (std::size_t i = 0; i < n; i += step) canvas.x_label(x_at(i), chart.x_labels[i]);
  canvas.legend(chart.series);
  return canvas.finish();
}

void write(const std::filesystem::path& path, const std::string& document) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error("svg", "cannot write " + path.string());
  out << document;
}

}  // namespace flusense::svg
