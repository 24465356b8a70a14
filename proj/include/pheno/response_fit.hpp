#pragma once

#include <cmath>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pheno/types.hpp"

namespace pheno {

/// Physiological process whose drought response is parameterized.
enum class Process { LE, TR };

std::string_view to_string(Process p) noexcept;
Process parse_process(std::string_view text);

/// Normalized rate at a given FTSW: y = -1 + 2 / (1 + exp(a * ftsw)).
/// For a < 0 the curve rises from y(0) = 0 towards 1; more negative a keeps y near 1
/// until the soil is drier.
template <typename Scalar>
Scalar response_curve(Scalar a, Scalar ftsw) {
  using std::exp;
  return Scalar(-1) + Scalar(2) / (Scalar(1) + exp(a * ftsw));
}

/// d response_curve / d a.
template <typename Scalar>
Scalar response_curve_slope(Scalar a, Scalar ftsw) {
  using std::exp;
  const Scalar e = exp(a * ftsw);
  return Scalar(-2) * ftsw * e / ((Scalar(1) + e) * (Scalar(1) + e));
}

struct ResponsePoint {
  std::string genotype;
  Process process = Process::LE;
  double ftsw = 0.0;
  double y = 0.0;
  double day = 0.0;
  PlantId plant;
};

struct ResponseFit {
  Process process = Process::LE;
  std::string genotype;
  double estimate = 0.0;
  double se = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
};

struct ThresholdFitOptions {
  double lower = -15.0;
  double upper = -0.5;
  int max_iterations = 100;
  double tolerance = 1e-12;  // on the step in a
  std::size_t min_points = 5;
  double min_span = 0.3;     // required max(ftsw) - min(ftsw)
};

/// Least-squares estimate of the threshold parameter from one (genotype, process) group.
/// Damped Gauss-Newton from the best point of a coarse scan, with golden-section search on
/// the bracketing scan interval when Gauss-Newton stalls.
/// rmse = sqrt(SSE / (n - 1)); se = rmse / sqrt(sum slope^2) at the optimum.
/// Throws TooFewPoints, InsufficientSpan or NonConvergence.
ResponseFit fit_threshold(std::span<const ResponsePoint> points, const ThresholdFitOptions& options = {});

struct FitAllResult {
  /// Sorted by process (LE first), then estimate descending, then genotype.
  std::vector<ResponseFit> fits;
  /// "process/genotype" -> reason for groups that could not be fitted.
  std::map<std::string, std::string> excluded;
};

FitAllResult fit_all(std::span<const ResponsePoint> points, const ThresholdFitOptions& options = {});

/// `process,genotype,estimate,se,rmse,n`
void write_fits(std::ostream& out, std::span<const ResponseFit> fits);
std::vector<ResponseFit> read_fits(std::istream& in);

struct PairedEstimate {
  std::string genotype;
  double a = 0.0;
  double b = 0.0;
};

struct ProcessComparison {
  Process process = Process::LE;
  std::vector<PairedEstimate> pairs;  // sorted by genotype
  double r = 0.0;
  double mean_difference = 0.0;  // mean(b - a)
  /// Smallest correlation after leaving one genotype out (needs >= 4 genotypes).
  std::optional<double> loo_r_min;
  std::optional<std::string> loo_genotype;
  /// Set when dropping `loo_genotype` lowers r by more than `influence_threshold`.
  bool single_genotype_driven = false;
};

struct ComparisonReport {
  std::vector<ProcessComparison> processes;
  std::string to_json() const;
};

inline constexpr double kInfluenceThreshold = 0.3;

/// Per-process agreement of two parameter sets for the same genotypes.
/// Throws InsufficientOverlap when a process present in both has fewer than 3 common genotypes.
ComparisonReport compare_methods(std::span<const ResponseFit> a, std::span<const ResponseFit> b,
                                 double influence_threshold = kInfluenceThreshold);

}  // namespace pheno
