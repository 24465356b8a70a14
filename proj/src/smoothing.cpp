#include "pheno/smoothing.hpp"

namespace pheno {

GrowthCurve build_growth_curve(const PlantId& plant, const std::vector<double>& days,
                               const std::vector<double>& raw, SmoothingParameter param) {
  const Eigen::Map<const Eigen::VectorXd> d(days.data(), static_cast<Eigen::Index>(days.size()));
  const Eigen::Map<const Eigen::VectorXd> v(raw.data(), static_cast<Eigen::Index>(raw.size()));
  const auto smooth = smooth_series(d, v, param);
  const Eigen::VectorXd mono = enforce_monotone(smooth.fitted);

  GrowthCurve curve;
  curve.plant = plant;
  curve.days = days;
  curve.raw = raw;
  curve.smoothed.assign(smooth.fitted.begin(), smooth.fitted.end());
  curve.monotone.assign(mono.begin(), mono.end());
  curve.lambda = smooth.lambda;
  curve.expansion_rate.resize(days.size() - 1);
  for (std::size_t i = 0; i + 1 < days.size(); ++i) {
    curve.expansion_rate[i] = (curve.monotone[i + 1] - curve.monotone[i]) / (days[i + 1] - days[i]);
  }
  return curve;
}

}  // namespace pheno
