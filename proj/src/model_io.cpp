#include "pheno/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pheno/error.hpp"

namespace pheno {

namespace {

using json = nlohmann::ordered_json;

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Eigen::VectorXd vector_from(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a.at(i).get<double>();
  return v;
}

json header(const char* kind) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelFormatVersion;
  j["kind"] = kind;
  return j;
}

json linear_json(const LinearAreaModel& m) {
  json j;
  j["intercept"] = m.intercept;
  json coef = json::object();
  for (std::size_t i = 0; i < m.predictor_names.size(); ++i) {
    coef[m.predictor_names[i]] = m.coefficients(static_cast<Eigen::Index>(i));
  }
  j["coefficients"] = coef;
  j["diagnostics"] = {{"n", m.diagnostics.n},
                      {"training_rmse", m.diagnostics.training_rmse},
                      {"excluded", m.diagnostics.excluded},
                      {"constant_predictors", m.diagnostics.constant_predictors}};
  return j;
}

LinearAreaModel linear_from(const json& j, const std::vector<std::string>& predictors) {
  LinearAreaModel m;
  m.intercept = j.at("intercept").get<double>();
  m.predictor_names = predictors;
  m.coefficients.resize(static_cast<Eigen::Index>(predictors.size()));
  const json& coef = j.at("coefficients");
  for (std::size_t i = 0; i < predictors.size(); ++i) {
    if (!coef.contains(predictors[i])) throw Error(ErrorKind::Format, "model lacks coefficient " + predictors[i]);
    m.coefficients(static_cast<Eigen::Index>(i)) = coef.at(predictors[i]).get<double>();
  }
  if (j.contains("diagnostics")) {
    const json& d = j.at("diagnostics");
    m.diagnostics.n = d.value("n", std::size_t{0});
    m.diagnostics.training_rmse = d.value("training_rmse", 0.0);
    m.diagnostics.excluded = d.value("excluded", std::size_t{0});
    m.diagnostics.constant_predictors = d.value("constant_predictors", std::vector<std::string>{});
  }
  return m;
}

}  // namespace

std::string model_to_json(const ScopedModelSet& set) {
  json j = header("linear");
  j["scope"] = std::string(to_string(set.scope));
  j["predictors"] = set.models.empty() ? std::vector<std::string>{} : set.models.begin()->second.predictor_names;
  json models = json::object();
  for (const auto& [key, m] : set.models) models[key] = linear_json(m);
  j["models"] = models;
  return j.dump(2) + "\n";
}

std::string model_to_json(const MlpAreaModel& m) {
  json j = header("mlp");
  j["inputs"] = m.input_names;
  j["input_mean"] = vector_json(m.input_mean);
  j["input_scale"] = vector_json(m.input_scale);
  json hidden = json::array();
  for (Eigen::Index r = 0; r < m.network.hidden_weights.rows(); ++r) {
    hidden.push_back(vector_json(m.network.hidden_weights.row(r).transpose()));
  }
  j["hidden_weights"] = hidden;
  j["hidden_bias"] = vector_json(m.network.hidden_bias);
  j["output_weights"] = vector_json(m.network.output_weights);
  j["output_bias"] = m.network.output_bias;
  j["training_log"] = {{"epochs_run", m.training_log.epochs_run},
                       {"best_epoch", m.training_log.best_epoch},
                       {"final_validation_loss", m.training_log.final_validation_loss}};
  return j.dump(2) + "\n";
}

std::string model_to_json(const AreaModel& model) {
  return std::visit([](const auto& m) { return model_to_json(m); }, model);
}

AreaModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("model file is not JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != kModelFormat) throw Error(ErrorKind::Format, "not a pheno area model");
    if (j.value("version", 0) != kModelFormatVersion) {
      throw Error(ErrorKind::Format, "unsupported model version " + std::to_string(j.value("version", 0)));
    }
    const std::string kind = j.value("kind", "");
    if (kind == "linear") {
      ScopedModelSet set;
      set.scope = parse_scope(j.at("scope").get<std::string>());
      const auto predictors = j.at("predictors").get<std::vector<std::string>>();
      for (const auto& [key, m] : j.at("models").items()) set.models[key] = linear_from(m, predictors);
      return set;
    }
    if (kind == "mlp") {
      MlpAreaModel m;
      m.input_names = j.at("inputs").get<std::vector<std::string>>();
      m.input_mean = vector_from(j.at("input_mean"));
      m.input_scale = vector_from(j.at("input_scale"));
      const json& hidden = j.at("hidden_weights");
      const auto d = static_cast<Eigen::Index>(m.input_names.size());
      m.network.hidden_weights.resize(static_cast<Eigen::Index>(hidden.size()), d);
      for (std::size_t r = 0; r < hidden.size(); ++r) {
        const Eigen::VectorXd row = vector_from(hidden[r]);
        if (row.size() != d) throw Error(ErrorKind::Format, "hidden weight row has wrong length");
        m.network.hidden_weights.row(static_cast<Eigen::Index>(r)) = row.transpose();
      }
      m.network.hidden_bias = vector_from(j.at("hidden_bias"));
      m.network.output_weights = vector_from(j.at("output_weights"));
      m.network.output_bias = j.at("output_bias").get<double>();
      if (m.input_mean.size() != d || m.input_scale.size() != d ||
          m.network.hidden_bias.size() != m.network.hidden_weights.rows() ||
          m.network.output_weights.size() != m.network.hidden_weights.rows()) {
        throw Error(ErrorKind::Format, "inconsistent MLP array shapes");
      }
      if (j.contains("training_log")) {
        const json& log = j.at("training_log");
        m.training_log.epochs_run = log.value("epochs_run", 0);
        m.training_log.best_epoch = log.value("best_epoch", 0);
        m.training_log.final_validation_loss = log.value("final_validation_loss", 0.0);
      }
      return m;
    }
    throw Error(ErrorKind::Format, "unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("malformed model file: ") + e.what());
  }
}

void save_model(const AreaModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << model_to_json(model);
}

AreaModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

std::optional<double> predict_area(const AreaModel& model, const FeatureRecord& record) {
  try {
    if (const auto* set = std::get_if<ScopedModelSet>(&model)) return set->predict(record);
    return predict_mlp(std::get<MlpAreaModel>(model), record.features);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::MissingPredictor || e.kind() == ErrorKind::UnknownPlant) return std::nullopt;
    throw;
  }
}

}  // namespace pheno
