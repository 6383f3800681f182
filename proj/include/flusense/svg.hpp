#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flusense::svg {

struct Series {
  std::string name;
  std::vector<std::optional<double>> values;  // gaps are skipped
};

/// Grouped bars: one group per category, one bar per series.
struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<Series> series;
};

/// Lines over a shared categorical x axis; labels are thinned to fit.
struct LineChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> x_labels;
  std::vector<Series> series;
};

std::string render(const BarChart& chart);
std::string render(const LineChart& chart);

void write(const std::filesystem::path& path, const std::string& document);

/// Escapes &, <, >, " and ' for attribute and text content.
std::string escape(const std::string& text);

}  // namespace flusense::svg
