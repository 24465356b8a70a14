#pragma once

#include <string>
#include <utility>
#include <vector>

namespace pheno::svg {

/// Version tag written into every figure.
inline constexpr const char* kGeneratorVersion = "pheno-svg 1";

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
  bool markers = true;
  bool line = false;
  bool dashed = false;
};

/// Minimal static chart: axes with ticks, scatter markers, polylines and a legend.
class Plot {
 public:
  Plot(std::string title, std::string x_label, std::string y_label, int width = 520, int height = 420);

  void add(Series series) { series_.push_back(std::move(series)); }
  /// Dashed y = x across the data range.
  void add_identity_line() { identity_ = true; }
  /// Several plots side by side share one file through `render_panels`.
  std::string render() const;

  static std::string render_panels(const std::vector<Plot>& panels);

 private:
  std::string body(double offset_x) const;

  std::string title_, x_label_, y_label_;
  int width_, height_;
  std::vector<Series> series_;
  bool identity_ = false;
};

void write_file(const std::string& path, const std::string& content);

}  // namespace pheno::svg
