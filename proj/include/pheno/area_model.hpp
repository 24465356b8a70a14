#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pheno/types.hpp"

namespace pheno {

enum class ModelScope { Global, PerTreatment, PerGenotype };

std::string_view to_string(ModelScope scope) noexcept;
/// Accepts global, treatment, genotype (and the Per* spellings).
ModelScope parse_scope(std::string_view text);

/// Key of `plant` under `scope`: "global", the treatment name, or the genotype.
std::string scope_key(ModelScope scope, const PlantId& plant);

struct LinearFitDiagnostics {
  std::size_t n = 0;
  double training_rmse = 0.0;
  /// Pairs skipped because a predictor was absent.
  std::size_t excluded = 0;
  /// Predictors with no spread in the training data (coefficient fixed at 0).
  std::vector<std::string> constant_predictors;
};

struct LinearAreaModel {
  double intercept = 0.0;  // mm^2
  std::vector<std::string> predictor_names;
  Eigen::VectorXd coefficients;
  LinearFitDiagnostics diagnostics;

  double coefficient(std::string_view name) const;
};

/// OLS of observed area on `predictors` (default: the four light-curtain features).
/// Throws TooFewObservations (fewer than p+1 usable pairs) or RankDeficient.
LinearAreaModel fit_linear(std::span<const ObservationPair> pairs,
                           const std::vector<std::string>& predictors = default_predictors());

/// intercept + sum coefficient * feature. May be negative. Throws MissingPredictor.
double predict_linear(const LinearAreaModel& model, const FeatureSet& features);

struct ScopedModelSet {
  ModelScope scope = ModelScope::Global;
  std::map<std::string, LinearAreaModel> models;

  const LinearAreaModel& model_for(const PlantId& plant) const;
  double predict(const FeatureRecord& record) const;
};

/// One model per scope key, each fitted on its own subset.
/// TooFewObservations names the offending key.
ScopedModelSet fit_scoped(std::span<const ObservationPair> pairs, ModelScope scope,
                          const std::vector<std::string>& predictors = default_predictors());

// ---------------------------------------------------------------------------
// Multi-layer perceptron

/// One hidden tanh layer and a linear output, in standardized input space.
struct MlpNetwork {
  Eigen::MatrixXd hidden_weights;  // H x D
  Eigen::VectorXd hidden_bias;     // H
  Eigen::VectorXd output_weights;  // H
  double output_bias = 0.0;

  Eigen::Index inputs() const { return hidden_weights.cols(); }
  Eigen::Index width() const { return hidden_weights.rows(); }

  /// Row-wise forward pass over samples in the rows of `inputs`.
  Eigen::VectorXd forward(const Eigen::Ref<const Eigen::MatrixXd>& inputs) const;

  /// Mean squared error over the rows, and its gradient in the same layout.
  double loss_and_gradient(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                           const Eigen::Ref<const Eigen::VectorXd>& targets, MlpNetwork& gradient) const;

  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::Ref<const Eigen::VectorXd>& params);
};

enum class MlpInit { Random, Zero };

struct MlpConfig {
  int hidden_width = 32;
  int epochs = 300;
  double learning_rate = 1e-3;
  int batch_size = 16;
  double validation_fraction = 0.2;
  int patience = 20;
  std::uint64_t seed = 1;
  MlpInit init = MlpInit::Random;
  /// Explicit input columns; empty means every feature column without absent values.
  std::vector<std::string> inputs;
};

struct MlpTrainingLog {
  int epochs_run = 0;
  int best_epoch = 0;
  double final_validation_loss = 0.0;  // MSE on the standardized target
};

struct MlpAreaModel {
  std::vector<std::string> input_names;
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  /// Output layer is stored in mm^2: area = output_bias + output_weights . tanh(...).
  MlpNetwork network;
  MlpTrainingLog training_log;
};

/// Mini-batch training (Adam updates) on mean squared error with early stopping.
/// Deterministic for a fixed seed and input order. Throws NonFiniteLoss on divergence.
MlpAreaModel fit_mlp(std::span<const ObservationPair> pairs, const MlpConfig& config = {});

double predict_mlp(const MlpAreaModel& model, const FeatureSet& features);

}  // namespace pheno
