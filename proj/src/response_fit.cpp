#include "pheno/response_fit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include <json.hpp>

#include "pheno/csv.hpp"
#include "pheno/error.hpp"
#include "pheno/evaluation.hpp"

namespace pheno {

std::string_view to_string(Process p) noexcept { return p == Process::LE ? "LE" : "TR"; }

Process parse_process(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "LE" || s == "LER") return Process::LE;
  if (s == "TR") return Process::TR;
  throw Error(ErrorKind::InvalidValue, "unknown process '" + std::string(text) + "'");
}

namespace {

constexpr int kScanPoints = 241;
constexpr double kGolden = 0.6180339887498949;

struct Objective {
  std::span<const ResponsePoint> points;

  double sse(double a) const {
    double s = 0.0;
    for (const auto& p : points) {
      const double r = p.y - response_curve(a, p.ftsw);
      s += r * r;
    }
    return s;
  }

  // Gauss-Newton increment (J'r / J'J) and J'J at a.
  std::pair<double, double> gauss_newton(double a) const {
    double jr = 0.0, jj = 0.0;
    for (const auto& p : points) {
      const double j = response_curve_slope(a, p.ftsw);
      jr += j * (p.y - response_curve(a, p.ftsw));
      jj += j * j;
    }
    return {jj > 0 ? jr / jj : 0.0, jj};
  }
};

double golden_section(const Objective& f, double lo, double hi, double tol) {
  double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
  double f1 = f.sse(x1), f2 = f.sse(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = f.sse(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = f.sse(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

std::string group_name(Process p, const std::string& genotype) {
  return std::string(to_string(p)) + "/" + genotype;
}

}  // namespace

ResponseFit fit_threshold(std::span<const ResponsePoint> points, const ThresholdFitOptions& opt) {
  if (points.size() < opt.min_points) {
    throw Error(ErrorKind::TooFewPoints,
                std::to_string(points.size()) + " points, need " + std::to_string(opt.min_points));
  }
  double lo_f = points.front().ftsw, hi_f = lo_f;
  for (const auto& p : points) {
    if (!std::isfinite(p.ftsw) || !std::isfinite(p.y)) throw Error(ErrorKind::InvalidValue, "non-finite response point");
    lo_f = std::min(lo_f, p.ftsw);
    hi_f = std::max(hi_f, p.ftsw);
  }
  if (hi_f - lo_f < opt.min_span) {
    throw Error(ErrorKind::InsufficientSpan, "FTSW spans " + std::to_string(hi_f - lo_f) + ", need " +
                                                 std::to_string(opt.min_span));
  }

  const Objective f{points};
  const double step = (opt.upper - opt.lower) / (kScanPoints - 1);
  int best_k = 0;
  double best_sse = f.sse(opt.lower);
  for (int k = 1; k < kScanPoints; ++k) {
    const double s = f.sse(opt.lower + k * step);
    if (s < best_sse) {
      best_sse = s;
      best_k = k;
    }
  }
  const double bracket_lo = opt.lower + std::max(0, best_k - 1) * step;
  const double bracket_hi = opt.lower + std::min(kScanPoints - 1, best_k + 1) * step;

  double a = opt.lower + best_k * step;
  double current = best_sse;
  bool converged = false;
  for (int it = 0; it < opt.max_iterations && !converged; ++it) {
    const auto [delta, jj] = f.gauss_newton(a);
    if (jj <= 0) break;
    double t = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      const double cand = std::clamp(a + t * delta, bracket_lo, bracket_hi);
      const double s = f.sse(cand);
      if (s <= current) {
        converged = std::abs(cand - a) <= opt.tolerance * std::max(1.0, std::abs(a));
        improved = s < current || converged;
        a = cand;
        current = s;
        break;
      }
    }
    if (!improved) {
      // no descent along the GN direction: the step is below rounding at the optimum
      converged = std::abs(delta) <= 1e-6 * std::max(1.0, std::abs(a));
      break;
    }
  }

  if (!converged) {
    const double g = golden_section(f, bracket_lo, bracket_hi, 1e-12 * std::max(1.0, std::abs(a)));
    if (f.sse(g) <= current) {
      a = g;
      current = f.sse(g);
    }
    const auto [delta, jj] = f.gauss_newton(a);
    const bool at_bound = a <= opt.lower + 1e-9 || a >= opt.upper - 1e-9;
    converged = jj > 0 && (std::abs(delta) <= 1e-6 * std::max(1.0, std::abs(a)) || at_bound);
    if (!converged) {
      throw Error(ErrorKind::NonConvergence, "last iterate a = " + std::to_string(a));
    }
  }

  const auto [delta, jj] = f.gauss_newton(a);
  (void)delta;
  ResponseFit fit;
  fit.process = points.front().process;
  fit.genotype = points.front().genotype;
  fit.n = points.size();
  fit.estimate = a;
  fit.rmse = std::sqrt(current / static_cast<double>(points.size() - 1));
  fit.se = jj > 0 ? fit.rmse / std::sqrt(jj) : std::numeric_limits<double>::infinity();
  return fit;
}

FitAllResult fit_all(std::span<const ResponsePoint> points, const ThresholdFitOptions& options) {
  std::map<std::pair<Process, std::string>, std::vector<ResponsePoint>> groups;
  for (const auto& p : points) groups[{p.process, p.genotype}].push_back(p);

  FitAllResult result;
  for (const auto& [key, group] : groups) {
    try {
      result.fits.push_back(fit_threshold(group, options));
    } catch (const Error& e) {
      result.excluded[group_name(key.first, key.second)] = e.what();
    }
  }
  std::sort(result.fits.begin(), result.fits.end(), [](const ResponseFit& x, const ResponseFit& y) {
    if (x.process != y.process) return x.process < y.process;
    if (x.estimate != y.estimate) return x.estimate > y.estimate;
    return x.genotype < y.genotype;
  });
  return result;
}

void write_fits(std::ostream& out, std::span<const ResponseFit> fits) {
  csv::write_row(out, {"process", "genotype", "estimate", "se", "rmse", "n"});
  for (const auto& f : fits) {
    csv::write_row(out, {std::string(to_string(f.process)), f.genotype, csv::format_number(f.estimate),
                         csv::format_number(f.se), csv::format_number(f.rmse), std::to_string(f.n)});
  }
}

std::vector<ResponseFit> read_fits(std::istream& in) {
  const auto t = csv::read(in);
  const std::size_t cp = t.require_column("process"), cg = t.require_column("genotype"),
                    ce = t.require_column("estimate"), cs = t.require_column("se"), cr = t.require_column("rmse"),
                    cn = t.require_column("n");
  std::vector<ResponseFit> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto num = [&](std::size_t c) {
      auto v = csv::parse_number(t.rows[r][c]);
      if (!v) {
        throw Error(ErrorKind::NonNumericValue, "row " + std::to_string(r + 1) + ", column " + t.header[c]);
      }
      return *v;
    };
    ResponseFit f;
    f.process = parse_process(t.rows[r][cp]);
    f.genotype = t.rows[r][cg];
    f.estimate = num(ce);
    f.se = num(cs);
    f.rmse = num(cr);
    f.n = static_cast<std::size_t>(num(cn));
    out.push_back(std::move(f));
  }
  return out;
}

ComparisonReport compare_methods(std::span<const ResponseFit> a, std::span<const ResponseFit> b,
                                 double influence_threshold) {
  std::map<std::pair<Process, std::string>, double> ea, eb;
  for (const auto& f : a) ea[{f.process, f.genotype}] = f.estimate;
  for (const auto& f : b) eb[{f.process, f.genotype}] = f.estimate;

  ComparisonReport report;
  for (Process process : {Process::LE, Process::TR}) {
    ProcessComparison cmp;
    cmp.process = process;
    bool in_a = false, in_b = false;
    for (const auto& [k, v] : ea) in_a = in_a || k.first == process;
    for (const auto& [k, v] : eb) in_b = in_b || k.first == process;
    if (!in_a || !in_b) continue;
    for (const auto& [k, va] : ea) {
      if (k.first != process) continue;
      if (auto it = eb.find(k); it != eb.end()) cmp.pairs.push_back({k.second, va, it->second});
    }
    if (cmp.pairs.size() < 3) {
      throw Error(ErrorKind::InsufficientOverlap, std::string(to_string(process)) + ": " +
                                                      std::to_string(cmp.pairs.size()) + " common genotypes, need 3");
    }
    std::vector<double> xs, ys;
    double diff = 0.0;
    for (const auto& p : cmp.pairs) {
      xs.push_back(p.a);
      ys.push_back(p.b);
      diff += p.b - p.a;
    }
    cmp.r = pearson_r(xs, ys);
    cmp.mean_difference = diff / static_cast<double>(cmp.pairs.size());

    if (cmp.pairs.size() >= 4) {
      for (std::size_t drop = 0; drop < cmp.pairs.size(); ++drop) {
        std::vector<double> x2, y2;
        for (std::size_t i = 0; i < cmp.pairs.size(); ++i) {
          if (i == drop) continue;
          x2.push_back(xs[i]);
          y2.push_back(ys[i]);
        }
        double r2;
        try {
          r2 = pearson_r(x2, y2);
        } catch (const Error&) {
          r2 = 0.0;  // no spread left once the genotype is removed
        }
        if (!cmp.loo_r_min || r2 < *cmp.loo_r_min) {
          cmp.loo_r_min = r2;
          cmp.loo_genotype = cmp.pairs[drop].genotype;
        }
      }
      cmp.single_genotype_driven = cmp.r - *cmp.loo_r_min > influence_threshold;
    }
    report.processes.push_back(std::move(cmp));
  }
  if (report.processes.empty()) throw Error(ErrorKind::InsufficientOverlap, "no process present in both fit sets");
  return report;
}

std::string ComparisonReport::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& c : processes) {
    nlohmann::ordered_json o;
    o["process"] = std::string(to_string(c.process));
    o["n"] = c.pairs.size();
    o["r"] = c.r;
    o["mean_difference"] = c.mean_difference;
    o["loo_r_min"] = c.loo_r_min ? nlohmann::ordered_json(*c.loo_r_min) : nlohmann::ordered_json(nullptr);
    o["loo_genotype"] = c.loo_genotype ? nlohmann::ordered_json(*c.loo_genotype) : nlohmann::ordered_json(nullptr);
    o["single_genotype_driven"] = c.single_genotype_driven;
    auto pairs = nlohmann::ordered_json::array();
    for (const auto& p : c.pairs) pairs.push_back({{"genotype", p.genotype}, {"a", p.a}, {"b", p.b}});
    o["pairs"] = pairs;
    j.push_back(o);
  }
  return j.dump(2) + "\n";
}

}  // namespace pheno
