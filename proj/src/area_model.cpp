#include "pheno/area_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "pheno/error.hpp"
#include "pheno/ols.hpp"
#include "pheno/random.hpp"

namespace pheno {

std::string_view to_string(ModelScope scope) noexcept {
  switch (scope) {
    case ModelScope::Global: return "global";
    case ModelScope::PerTreatment: return "treatment";
    case ModelScope::PerGenotype: return "genotype";
  }
  return "global";
}

ModelScope parse_scope(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "global") return ModelScope::Global;
  if (s == "treatment" || s == "pertreatment") return ModelScope::PerTreatment;
  if (s == "genotype" || s == "pergenotype") return ModelScope::PerGenotype;
  throw Error(ErrorKind::ConfigInvalid, "unknown model scope '" + s + "'");
}

std::string scope_key(ModelScope scope, const PlantId& plant) {
  switch (scope) {
    case ModelScope::Global: return "global";
    case ModelScope::PerTreatment: return std::string(to_string(plant.treatment));
    case ModelScope::PerGenotype: return plant.genotype;
  }
  return "global";
}

double LinearAreaModel::coefficient(std::string_view name) const {
  for (std::size_t j = 0; j < predictor_names.size(); ++j) {
    if (predictor_names[j] == name) return coefficients(static_cast<Eigen::Index>(j));
  }
  throw Error(ErrorKind::MissingPredictor, std::string(name));
}

LinearAreaModel fit_linear(std::span<const ObservationPair> pairs, const std::vector<std::string>& predictors) {
  if (predictors.empty()) throw Error(ErrorKind::ConfigInvalid, "no predictors");
  if (std::set<std::string>(predictors.begin(), predictors.end()).size() != predictors.size()) {
    throw Error(ErrorKind::ConfigInvalid, "duplicate predictor names");
  }
  const auto p = static_cast<Eigen::Index>(predictors.size());

  std::vector<Eigen::Index> usable;
  std::vector<std::vector<double>> rows;
  std::size_t excluded = 0;
  for (const auto& pair : pairs) {
    std::vector<double> row;
    row.reserve(predictors.size());
    for (const auto& name : predictors) {
      auto v = pair.features.features.get(name);
      if (!v || !std::isfinite(*v)) break;
      row.push_back(*v);
    }
    if (row.size() == predictors.size()) {
      rows.push_back(std::move(row));
      usable.push_back(static_cast<Eigen::Index>(&pair - pairs.data()));
    } else {
      ++excluded;
    }
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < p + 1) {
    throw Error(ErrorKind::TooFewObservations,
                std::to_string(n) + " usable pairs for " + std::to_string(p) + " predictors");
  }

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rows[i][j];
    y(i) = pairs[usable[i]].observed_area;
  }

  auto sol = ols_fit(X, y);
  if (sol.dependent_column) {
    throw Error(ErrorKind::RankDeficient,
                "predictor '" + predictors[*sol.dependent_column] + "' is collinear with the others");
  }

  LinearAreaModel model;
  model.intercept = sol.intercept;
  model.predictor_names = predictors;
  model.coefficients = sol.coefficients;
  model.diagnostics.n = static_cast<std::size_t>(n);
  model.diagnostics.excluded = excluded;
  for (auto j : sol.constant_columns) model.diagnostics.constant_predictors.push_back(predictors[j]);
  const Eigen::VectorXd resid = y - ((X * sol.coefficients).array() + sol.intercept).matrix();
  model.diagnostics.training_rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  return model;
}

double predict_linear(const LinearAreaModel& model, const FeatureSet& features) {
  double area = model.intercept;
  for (std::size_t j = 0; j < model.predictor_names.size(); ++j) {
    auto v = features.get(model.predictor_names[j]);
    if (!v) throw Error(ErrorKind::MissingPredictor, model.predictor_names[j]);
    area += model.coefficients(static_cast<Eigen::Index>(j)) * *v;
  }
  return area;
}

const LinearAreaModel& ScopedModelSet::model_for(const PlantId& plant) const {
  const std::string key = scope_key(scope, plant);
  auto it = models.find(key);
  if (it == models.end()) {
    throw Error(ErrorKind::UnknownPlant, "no " + std::string(to_string(scope)) + " model for '" + key + "'");
  }
  return it->second;
}

double ScopedModelSet::predict(const FeatureRecord& record) const {
  return predict_linear(model_for(record.plant), record.features);
}

ScopedModelSet fit_scoped(std::span<const ObservationPair> pairs, ModelScope scope,
                          const std::vector<std::string>& predictors) {
  std::map<std::string, std::vector<ObservationPair>> groups;
  for (const auto& pair : pairs) groups[scope_key(scope, pair.plant)].push_back(pair);
  if (groups.empty()) throw Error(ErrorKind::TooFewObservations, "no observation pairs");

  ScopedModelSet set;
  set.scope = scope;
  for (const auto& [key, subset] : groups) {
    try {
      set.models.emplace(key, fit_linear(subset, predictors));
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(to_string(scope)) + " '" + key + "': " + e.message());
    }
  }
  return set;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd MlpNetwork::forward(const Eigen::Ref<const Eigen::MatrixXd>& inputs) const {
  Eigen::MatrixXd act = (inputs * hidden_weights.transpose()).rowwise() + hidden_bias.transpose();
  act = act.array().tanh();
  return (act * output_weights).array() + output_bias;
}

double MlpNetwork::loss_and_gradient(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                     const Eigen::Ref<const Eigen::VectorXd>& targets,
                                     MlpNetwork& gradient) const {
  const double n = static_cast<double>(inputs.rows());
  Eigen::MatrixXd act = (inputs * hidden_weights.transpose()).rowwise() + hidden_bias.transpose();
  act = act.array().tanh();
  const Eigen::VectorXd resid = ((act * output_weights).array() + output_bias).matrix() - targets;
  const Eigen::VectorXd d_out = resid * (2.0 / n);

  gradient.output_weights = act.transpose() * d_out;
  gradient.output_bias = d_out.sum();
  const Eigen::MatrixXd d_act =
      ((d_out * output_weights.transpose()).array() * (1.0 - act.array().square())).matrix();
  gradient.hidden_weights = d_act.transpose() * inputs;
  gradient.hidden_bias = d_act.colwise().sum().transpose();
  return resid.squaredNorm() / n;
}

Eigen::VectorXd MlpNetwork::flatten() const {
  const Eigen::Index w1 = hidden_weights.size(), h = hidden_bias.size();
  Eigen::VectorXd p(w1 + 2 * h + 1);
  p.head(w1) = hidden_weights.reshaped();
  p.segment(w1, h) = hidden_bias;
  p.segment(w1 + h, h) = output_weights;
  p(w1 + 2 * h) = output_bias;
  return p;
}

void MlpNetwork::unflatten(const Eigen::Ref<const Eigen::VectorXd>& p) {
  const Eigen::Index w1 = hidden_weights.size(), h = hidden_bias.size();
  hidden_weights.reshaped() = p.head(w1);
  hidden_bias = p.segment(w1, h);
  output_weights = p.segment(w1 + h, h);
  output_bias = p(w1 + 2 * h);
}

namespace {

std::vector<std::string> mlp_inputs(std::span<const ObservationPair> pairs, const MlpConfig& config) {
  if (!config.inputs.empty()) return config.inputs;
  const auto& names = pairs.front().features.features.names();
  std::vector<std::string> out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    bool complete = std::all_of(pairs.begin(), pairs.end(), [&](const ObservationPair& p) {
      const auto& vals = p.features.features.values();
      return p.features.features.names() == names && std::isfinite(vals[j]);
    });
    if (complete) out.push_back(names[j]);
  }
  return out;
}

Eigen::MatrixXd design(std::span<const ObservationPair> pairs, const std::vector<std::string>& inputs) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      auto v = pairs[i].features.features.get(inputs[j]);
      if (!v) throw Error(ErrorKind::MissingPredictor, inputs[j]);
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  return X;
}

struct Adam {
  Eigen::VectorXd m, v;
  int t = 0;
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    if (m.size() == 0) {
      m = Eigen::VectorXd::Zero(params.size());
      v = Eigen::VectorXd::Zero(params.size());
    }
    ++t;
    m = b1 * m + (1 - b1) * grad;
    v = b2 * v + (1 - b2) * grad.cwiseAbs2();
    const double c1 = 1 - std::pow(b1, t), c2 = 1 - std::pow(b2, t);
    params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace

MlpAreaModel fit_mlp(std::span<const ObservationPair> pairs, const MlpConfig& config) {
  if (config.hidden_width < 1 || config.batch_size < 1 || config.epochs < 0 || config.learning_rate <= 0 ||
      config.validation_fraction < 0 || config.validation_fraction >= 1 || config.patience < 1) {
    throw Error(ErrorKind::ConfigInvalid, "invalid MLP configuration");
  }
  if (pairs.size() < 20) {
    throw Error(ErrorKind::TooFewObservations, std::to_string(pairs.size()) + " pairs, MLP needs at least 20");
  }

  MlpAreaModel model;
  model.input_names = mlp_inputs(pairs, config);
  if (model.input_names.empty()) throw Error(ErrorKind::MissingPredictor, "no complete numeric feature columns");
  const Eigen::MatrixXd X = design(pairs, model.input_names);
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = pairs[static_cast<std::size_t>(i)].observed_area;

  Rng rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(X.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  rng.shuffle(order);
  auto n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(order.size())));
  std::vector<Eigen::Index> val(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  std::vector<Eigen::Index> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));

  const Eigen::MatrixXd Xtr = X(train, Eigen::all);
  model.input_mean = Xtr.colwise().mean().transpose();
  model.input_scale = ((Xtr.rowwise() - model.input_mean.transpose()).array().square().colwise().sum() /
                       static_cast<double>(Xtr.rows()))
                          .sqrt()
                          .transpose();
  for (auto& s : model.input_scale) {
    if (!(s > 0)) s = 1.0;
  }
  const Eigen::MatrixXd Z =
      ((X.rowwise() - model.input_mean.transpose()).array().rowwise() / model.input_scale.transpose().array())
          .matrix();
  const Eigen::VectorXd ytr = y(train);
  const double y_mean = ytr.mean();
  double y_scale = std::sqrt((ytr.array() - y_mean).square().mean());
  if (!(y_scale > 0)) y_scale = 1.0;
  const Eigen::VectorXd t = (y.array() - y_mean) / y_scale;

  const Eigen::Index D = X.cols(), H = config.hidden_width;
  MlpNetwork net{Eigen::MatrixXd::Zero(H, D), Eigen::VectorXd::Zero(H), Eigen::VectorXd::Zero(H), 0.0};
  if (config.init == MlpInit::Random) {
    const double s1 = 1.0 / std::sqrt(static_cast<double>(D)), s2 = 1.0 / std::sqrt(static_cast<double>(H));
    for (Eigen::Index i = 0; i < H; ++i)
      for (Eigen::Index j = 0; j < D; ++j) net.hidden_weights(i, j) = s1 * rng.normal();
    for (Eigen::Index i = 0; i < H; ++i) net.output_weights(i) = s2 * rng.normal();
  }

  const Eigen::MatrixXd Zval = Z(val, Eigen::all);
  const Eigen::VectorXd tval = t(val);
  const Eigen::MatrixXd Ztr = Z(train, Eigen::all);
  const Eigen::VectorXd ttr = t(train);
  auto eval_loss = [&](const MlpNetwork& nw) {
    if (val.empty()) return (nw.forward(Ztr) - ttr).squaredNorm() / static_cast<double>(ttr.size());
    return (nw.forward(Zval) - tval).squaredNorm() / static_cast<double>(tval.size());
  };

  MlpNetwork best = net;
  double best_loss = eval_loss(net);
  int best_epoch = 0, epochs_run = 0, stale = 0;
  Eigen::VectorXd params = net.flatten();
  Adam adam;
  MlpNetwork grad = net;
  std::vector<Eigen::Index> batch_order(train.size());
  std::iota(batch_order.begin(), batch_order.end(), Eigen::Index{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(batch_order);
    for (std::size_t b = 0; b < batch_order.size(); b += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t e = std::min(batch_order.size(), b + static_cast<std::size_t>(config.batch_size));
      std::vector<Eigen::Index> idx(batch_order.begin() + static_cast<std::ptrdiff_t>(b),
                                    batch_order.begin() + static_cast<std::ptrdiff_t>(e));
      const double loss = net.loss_and_gradient(Ztr(idx, Eigen::all), ttr(idx), grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", learning rate " +
                                                  std::to_string(config.learning_rate));
      }
      adam.step(params, grad.flatten(), config.learning_rate);
      net.unflatten(params);
    }
    epochs_run = epoch;
    const double vl = eval_loss(net);
    if (!std::isfinite(vl)) {
      throw Error(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", learning rate " +
                                                std::to_string(config.learning_rate));
    }
    if (vl < best_loss) {
      best_loss = vl;
      best = net;
      best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }

  best.output_weights *= y_scale;
  best.output_bias = y_mean + y_scale * best.output_bias;
  model.network = std::move(best);
  model.training_log = {epochs_run, best_epoch, best_loss};
  return model;
}

double predict_mlp(const MlpAreaModel& model, const FeatureSet& features) {
  Eigen::RowVectorXd z(static_cast<Eigen::Index>(model.input_names.size()));
  for (std::size_t j = 0; j < model.input_names.size(); ++j) {
    auto v = features.get(model.input_names[j]);
    if (!v) throw Error(ErrorKind::MissingPredictor, model.input_names[j]);
    const auto k = static_cast<Eigen::Index>(j);
    z(k) = (*v - model.input_mean(k)) / model.input_scale(k);
  }
  return model.network.forward(z)(0);
}

}  // namespace pheno
