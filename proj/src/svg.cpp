#include "pheno/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "pheno/error.hpp"

namespace pheno::svg {

namespace {

constexpr double kMarginLeft = 70, kMarginRight = 20, kMarginTop = 36, kMarginBottom = 50;

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
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

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return mag * (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0);
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5 * std::max(1.0, std::abs(lo));
      hi += 0.5 * std::max(1.0, std::abs(hi));
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

}  // namespace

Plot::Plot(std::string title, std::string x_label, std::string y_label, int width, int height)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)),
      width_(width), height_(height) {}

std::string Plot::body(double ox) const {
  Range xr, yr;
  for (const auto& s : series_) {
    for (auto [x, y] : s.points) {
      xr.add(x);
      yr.add(y);
    }
  }
  if (identity_) {
    Range both;
    both.add(xr.lo);
    both.add(xr.hi);
    both.add(yr.lo);
    both.add(yr.hi);
    xr = yr = both;
  }
  xr.finish();
  yr.finish();

  const double pw = width_ - kMarginLeft - kMarginRight, ph = height_ - kMarginTop - kMarginBottom;
  auto sx = [&](double x) { return ox + kMarginLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return kMarginTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<text x=\"" << fixed(ox + width_ / 2.0) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(title_) << "</text>\n";
  o << "<rect x=\"" << fixed(ox + kMarginLeft) << "\" y=\"" << fixed(kMarginTop) << "\" width=\"" << fixed(pw)
    << "\" height=\"" << fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  const double xs = nice_step(xr.hi - xr.lo), ys = nice_step(yr.hi - yr.lo);
  for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi; t += xs) {
    o << "<line x1=\"" << fixed(sx(t)) << "\" y1=\"" << fixed(kMarginTop + ph) << "\" x2=\"" << fixed(sx(t))
      << "\" y2=\"" << fixed(kMarginTop + ph + 5) << "\" stroke=\"black\"/>"
      << "<text x=\"" << fixed(sx(t)) << "\" y=\"" << fixed(kMarginTop + ph + 18)
      << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(t) << "</text>\n";
  }
  for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi; t += ys) {
    o << "<line x1=\"" << fixed(ox + kMarginLeft - 5) << "\" y1=\"" << fixed(sy(t)) << "\" x2=\""
      << fixed(ox + kMarginLeft) << "\" y2=\"" << fixed(sy(t)) << "\" stroke=\"black\"/>"
      << "<text x=\"" << fixed(ox + kMarginLeft - 8) << "\" y=\"" << fixed(sy(t) + 3)
      << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(t) << "</text>\n";
  }
  o << "<text x=\"" << fixed(ox + kMarginLeft + pw / 2) << "\" y=\"" << fixed(height_ - 10.0)
    << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(x_label_) << "</text>\n";
  o << "<text x=\"" << fixed(ox + 16) << "\" y=\"" << fixed(kMarginTop + ph / 2) << "\" text-anchor=\"middle\" "
    << "font-size=\"12\" transform=\"rotate(-90 " << fixed(ox + 16) << " " << fixed(kMarginTop + ph / 2) << ")\">"
    << escape(y_label_) << "</text>\n";

  if (identity_) {
    o << "<line x1=\"" << fixed(sx(xr.lo)) << "\" y1=\"" << fixed(sy(xr.lo)) << "\" x2=\"" << fixed(sx(xr.hi))
      << "\" y2=\"" << fixed(sy(xr.hi)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }

  int legend_row = 0;
  for (const auto& s : series_) {
    if (s.line && s.points.size() > 1) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
      if (s.dashed) o << " stroke-dasharray=\"5 3\"";
      o << " points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        if (i) o << ' ';
        o << fixed(sx(s.points[i].first)) << ',' << fixed(sy(s.points[i].second));
      }
      o << "\"/>\n";
    }
    if (s.markers) {
      for (auto [x, y] : s.points) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        o << "<circle cx=\"" << fixed(sx(x)) << "\" cy=\"" << fixed(sy(y)) << "\" r=\"2.5\" fill=\"" << s.color
          << "\" fill-opacity=\"0.7\"/>\n";
      }
    }
    if (!s.label.empty()) {
      const double ly = kMarginTop + 14 + 14 * legend_row++;
      o << "<rect x=\"" << fixed(ox + kMarginLeft + 8) << "\" y=\"" << fixed(ly - 8) << "\" width=\"10\" height=\"10\" "
        << "fill=\"" << s.color << "\"/><text x=\"" << fixed(ox + kMarginLeft + 22) << "\" y=\"" << fixed(ly)
        << "\" font-size=\"11\">" << escape(s.label) << "</text>\n";
    }
  }
  return o.str();
}

std::string Plot::render() const { return render_panels({*this}); }

std::string Plot::render_panels(const std::vector<Plot>& panels) {
  int total_w = 0, h = 0;
  for (const auto& p : panels) {
    total_w += p.width_;
    h = std::max(h, p.height_);
  }
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<!-- " << kGeneratorVersion << " -->\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w << "\" height=\"" << h << "\" viewBox=\"0 0 "
    << total_w << ' ' << h << "\" font-family=\"sans-serif\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  double ox = 0;
  for (const auto& p : panels) {
    o << p.body(ox);
    ox += p.width_;
  }
  o << "</svg>\n";
  return o.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
  f << content;
}

}  // namespace pheno::svg
