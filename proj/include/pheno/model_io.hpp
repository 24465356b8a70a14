#pragma once

#include <optional>
#include <string>
#include <variant>

#include "pheno/area_model.hpp"

namespace pheno {

/// Format tag and version written into every model file.
inline constexpr const char* kModelFormat = "pheno-area-model";
inline constexpr int kModelFormatVersion = 1;

/// A fitted area model of either family.
using AreaModel = std::variant<ScopedModelSet, MlpAreaModel>;

std::string model_to_json(const ScopedModelSet& models);
std::string model_to_json(const MlpAreaModel& model);
std::string model_to_json(const AreaModel& model);

/// Throws Error(Format) on an unknown format, version or kind.
AreaModel model_from_json(const std::string& text);

void save_model(const AreaModel& model, const std::string& path);
AreaModel load_model(const std::string& path);

/// Prediction for one image; nullopt when the record lacks a model input or
/// belongs to a scope key the model has not seen.
std::optional<double> predict_area(const AreaModel& model, const FeatureRecord& record);

}  // namespace pheno
