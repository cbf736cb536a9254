#include "moralframe/classifier.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include <Eigen/Dense>

#include "moralframe/error.h"
#include "moralframe/random.h"
#include "json_util.h"

namespace moralframe {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// log(1 + exp(z)) without overflow.
double log1p_exp(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

void check_labels(std::span<const int> y, std::size_t rows) {
  if (y.size() != rows) {
    throw DataError("label count " + std::to_string(y.size()) +
                    " does not match row count " + std::to_string(rows));
  }
  std::size_t positives = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
    positives += static_cast<std::size_t>(v);
  }
  if (positives == 0 || positives == y.size()) {
    throw DataError("labels contain a single class; need both 0 and 1");
  }
}

void check_finite(const FeatureMatrix& x) {
  for (double v : x.values()) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
}

// Standardized copy of the kept columns.
RowMatrix standardize(const FeatureMatrix& x, const Standardization& s) {
  std::size_t kept = s.kept();
  RowMatrix out(x.rows(), kept);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (s.dropped[c]) continue;
      out(r, k++) = (x.at(r, c) - s.means[c]) / s.stds[c];
    }
  }
  return out;
}

struct Evaluation {
  double loss = 0.0;
  Eigen::VectorXd grad_w;
  double grad_b = 0.0;
};

Evaluation evaluate(const RowMatrix& x, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& w, double b, double l2) {
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd z = x * w;
  z.array() += b;
  Eigen::VectorXd residual(z.size());
  double nll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    nll += log1p_exp(z[i]) - y[i] * z[i];
    residual[i] = sigmoid(z[i]) - y[i];
  }
  Evaluation e;
  e.loss = nll / n + 0.5 * l2 / n * w.squaredNorm();
  e.grad_w = x.transpose() * residual / n + (l2 / n) * w;
  e.grad_b = residual.sum() / n;
  return e;
}

double max_norm(const Evaluation& e) {
  double m = std::abs(e.grad_b);
  if (e.grad_w.size() > 0) m = std::max(m, e.grad_w.cwiseAbs().maxCoeff());
  return m;
}

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::vector<std::string> feature_names)
    : feature_names_(std::move(feature_names)) {}

void FeatureMatrix::add_row(std::string id, std::span<const double> features) {
  if (features.size() != cols()) {
    throw DataError("row '" + id + "' has " + std::to_string(features.size()) +
                    " features, expected " + std::to_string(cols()));
  }
  ids_.push_back(std::move(id));
  values_.insert(values_.end(), features.begin(), features.end());
}

std::span<const double> FeatureMatrix::row(std::size_t i) const {
  return std::span<const double>(values_).subspan(i * cols(), cols());
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
  return out;
}

std::optional<std::size_t> FeatureMatrix::find_row(const std::string& id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

FeatureMatrix FeatureMatrix::select_rows(
    std::span<const std::size_t> indices) const {
  FeatureMatrix out(feature_names_);
  for (std::size_t i : indices) out.add_row(ids_.at(i), row(i));
  return out;
}

FeatureMatrix concat_columns(const FeatureMatrix& left,
                             const FeatureMatrix& right) {
  if (left.ids() != right.ids()) {
    throw DataError("concat_columns: row ids differ between feature sets");
  }
  std::vector<std::string> names = left.feature_names();
  for (const auto& n : right.feature_names()) {
    if (std::find(names.begin(), names.end(), n) != names.end()) {
      throw DataError("concat_columns: duplicate feature name '" + n + "'");
    }
    names.push_back(n);
  }
  FeatureMatrix out(std::move(names));
  std::vector<double> row;
  for (std::size_t r = 0; r < left.rows(); ++r) {
    row.assign(left.row(r).begin(), left.row(r).end());
    row.insert(row.end(), right.row(r).begin(), right.row(r).end());
    out.add_row(left.ids()[r], row);
  }
  return out;
}

nlohmann::json to_json(const TrainConfig& config) {
  return {{"l2_strength", config.l2_strength},
          {"learning_rate", config.learning_rate},
          {"max_iterations", config.max_iterations},
          {"tolerance", config.tolerance}};
}

TrainConfig train_config_from_json(const nlohmann::json& doc,
                                   TrainConfig defaults) {
  if (!doc.is_object()) throw DataError("classifier config must be an object");
  if (doc.contains("l2_strength"))
    defaults.l2_strength = json_util::get_double(doc, "l2_strength", "classifier");
  if (doc.contains("learning_rate"))
    defaults.learning_rate =
        json_util::get_double(doc, "learning_rate", "classifier");
  if (doc.contains("max_iterations"))
    defaults.max_iterations =
        json_util::get_size(doc, "max_iterations", "classifier");
  if (doc.contains("tolerance"))
    defaults.tolerance = json_util::get_double(doc, "tolerance", "classifier");
  return defaults;
}

std::size_t Standardization::kept() const {
  return static_cast<std::size_t>(
      std::count(dropped.begin(), dropped.end(), false));
}

Standardization fit_standardization(const FeatureMatrix& x) {
  Standardization s;
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x.at(r, c);
    mean /= n;
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double d = x.at(r, c) - mean;
      ss += d * d;
    }
    double sd = std::sqrt(ss / n);
    bool drop = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    s.means.push_back(mean);
    s.stds.push_back(drop ? 1.0 : sd);
    s.dropped.push_back(drop);
  }
  return s;
}

ObjectiveValue logistic_objective(const FeatureMatrix& standardized,
                                  std::span<const int> y,
                                  std::span<const double> weights,
                                  double intercept, double l2_strength) {
  if (weights.size() != standardized.cols() || y.size() != standardized.rows()) {
    throw DataError("logistic_objective: shape mismatch");
  }
  RowMatrix x = Eigen::Map<const RowMatrix>(standardized.values().data(),
                                            standardized.rows(),
                                            standardized.cols());
  Eigen::VectorXd yy(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) yy[i] = y[i];
  Eigen::VectorXd w =
      Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size());
  Evaluation e = evaluate(x, yy, w, intercept, l2_strength);
  ObjectiveValue out;
  out.loss = e.loss;
  out.weight_gradient.assign(e.grad_w.data(), e.grad_w.data() + e.grad_w.size());
  out.intercept_gradient = e.grad_b;
  return out;
}

LogisticModel train_logistic(const FeatureMatrix& x, std::span<const int> y,
                             const TrainConfig& config) {
  if (x.rows() == 0) throw DataError("train_logistic: no rows");
  check_labels(y, x.rows());
  check_finite(x);
  if (!(config.l2_strength > 0.0) || !(config.learning_rate > 0.0) ||
      config.max_iterations == 0 || !(config.tolerance > 0.0)) {
    throw DataError("train_logistic: config values must be positive");
  }

  LogisticModel model;
  model.feature_names = x.feature_names();
  model.scaling = fit_standardization(x);
  RowMatrix xs = standardize(x, model.scaling);
  Eigen::VectorXd yy(y.size());
  double positives = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    yy[i] = y[i];
    positives += y[i];
  }

  const double rate = positives / static_cast<double>(y.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(xs.cols());
  double b = std::log(rate / (1.0 - rate));
  double lr = config.learning_rate;
  const double min_lr = config.learning_rate * 1e-15;

  Evaluation current = evaluate(xs, yy, w, b, config.l2_strength);
  if (!std::isfinite(current.loss)) throw DataError("train_logistic: initial loss is not finite");

  TrainingInfo& info = model.info;
  info.l2_strength = config.l2_strength;
  info.initial_learning_rate = config.learning_rate;
  info.rows = x.rows();
  info.loss_history.push_back(current.loss);

  while (info.iterations < config.max_iterations) {
    if (max_norm(current) < config.tolerance) {
      info.converged = true;
      break;
    }
    Eigen::VectorXd w_next = w - lr * current.grad_w;
    double b_next = b - lr * current.grad_b;
    Evaluation next = evaluate(xs, yy, w_next, b_next, config.l2_strength);
    if (!std::isfinite(next.loss) || next.loss > current.loss) {
      lr *= 0.5;
      if (lr < min_lr) break;  // no representable descent step left
      continue;
    }
    w = std::move(w_next);
    b = b_next;
    current = std::move(next);
    ++info.iterations;
    info.loss_history.push_back(current.loss);
  }
  if (!info.converged && max_norm(current) < config.tolerance) {
    info.converged = true;
  }
  if (!std::isfinite(current.loss) || !w.allFinite() || !std::isfinite(b)) {
    throw DataError("train_logistic: optimization diverged");
  }

  info.final_loss = current.loss;
  info.final_gradient_norm = max_norm(current);
  info.final_learning_rate = lr;
  model.intercept = b;
  model.weights.assign(x.cols(), 0.0);
  std::size_t k = 0;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    if (!model.scaling.dropped[c]) model.weights[c] = w[k++];
  }
  return model;
}

double predict_proba(const LogisticModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) {
    throw DataError("predict_proba: got " + std::to_string(x.size()) +
                    " features, model has " +
                    std::to_string(model.weights.size()));
  }
  double z = model.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) throw DataError("predict_proba: non-finite input");
    if (model.scaling.dropped[j]) continue;
    z += model.weights[j] * (x[j] - model.scaling.means[j]) /
         model.scaling.stds[j];
  }
  return sigmoid(z);
}

int predict_label(const LogisticModel& model, std::span<const double> x,
                  double threshold) {
  return predict_proba(model, x) >= threshold ? 1 : 0;
}

std::vector<double> predict_proba(const LogisticModel& model,
                                  const FeatureMatrix& x) {
  std::vector<double> out;
  out.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    out.push_back(predict_proba(model, x.row(r)));
  }
  return out;
}

double normal_two_sided_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw UsageError("confidence level must lie in (0, 1)");
  }
  const double target = 0.5 + 0.5 * level;
  double lo = 0.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (standard_normal_cdf(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<CoefficientInterval> coefficient_intervals(
    const LogisticModel& model, const FeatureMatrix& x, std::span<const int> y,
    double level) {
  if (x.cols() != model.weights.size()) {
    throw DataError("coefficient_intervals: feature count mismatch");
  }
  if (y.size() != x.rows()) {
    throw DataError("coefficient_intervals: label count mismatch");
  }
  const double z_level = normal_two_sided_quantile(level);
  RowMatrix xs = standardize(x, model.scaling);
  const Eigen::Index k = xs.cols();

  Eigen::VectorXd w_kept(k);
  std::vector<std::size_t> kept_index;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    if (model.scaling.dropped[c]) continue;
    w_kept[static_cast<Eigen::Index>(kept_index.size())] = model.weights[c];
    kept_index.push_back(c);
  }

  // Design with a leading intercept column; information = D^T W D + L.
  RowMatrix design(xs.rows(), k + 1);
  design.col(0).setOnes();
  design.rightCols(k) = xs;
  Eigen::VectorXd weight(xs.rows());
  Eigen::VectorXd z = xs * w_kept;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double p = sigmoid(z[i] + model.intercept);
    weight[i] = p * (1.0 - p);
  }
  Eigen::MatrixXd info = design.transpose() * weight.asDiagonal() * design;
  for (Eigen::Index j = 1; j <= k; ++j) info(j, j) += model.info.l2_strength;

  Eigen::VectorXd variances = Eigen::VectorXd::Constant(
      k + 1, std::numeric_limits<double>::quiet_NaN());
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd inverse =
        llt.solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
    variances = inverse.diagonal();
  } else {
    // Singular information: report only directions orthogonal to the null
    // space as estimable.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    const Eigen::VectorXd& values = eig.eigenvalues();
    const Eigen::MatrixXd& vectors = eig.eigenvectors();
    double cutoff = 1e-10 * std::max(1.0, values.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j <= k; ++j) {
      double var = 0.0;
      bool ok = true;
      for (Eigen::Index e = 0; e <= k; ++e) {
        double v = vectors(j, e);
        if (values[e] <= cutoff) {
          if (std::abs(v) > 1e-8) ok = false;
          continue;
        }
        var += v * v / values[e];
      }
      if (ok) variances[j] = var;
    }
  }

  std::vector<CoefficientInterval> out(x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    out[c].estimate = model.weights[c];
  }
  for (std::size_t j = 0; j < kept_index.size(); ++j) {
    double var = variances[static_cast<Eigen::Index>(j) + 1];
    CoefficientInterval& ci = out[kept_index[j]];
    if (!(std::isfinite(var) && var > 0.0)) continue;
    double se = std::sqrt(var);
    ci.std_error = se;
    ci.low = ci.estimate - z_level * se;
    ci.high = ci.estimate + z_level * se;
    ci.estimable = true;
    ci.significant = ci.low > 0.0 || ci.high < 0.0;
  }
  return out;
}

void attach_intervals(LogisticModel& model, const FeatureMatrix& x,
                      std::span<const int> y, double level) {
  model.intervals = coefficient_intervals(model, x, y, level);
  model.interval_level = level;
}

std::vector<NamedModel> train_multilabel(const FeatureMatrix& x,
                                         std::span<const LabelColumn> columns,
                                         const TrainConfig& config,
                                         unsigned threads) {
  std::vector<NamedModel> out(columns.size());
  std::vector<std::exception_ptr> errors(columns.size());
  auto train_one = [&](std::size_t i) {
    try {
      out[i] = {columns[i].name,
                train_logistic(x, columns[i].labels, config)};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1 || columns.size() <= 1) {
    for (std::size_t i = 0; i < columns.size(); ++i) train_one(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < columns.size(); i += threads) train_one(i);
      });
    }
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const DataError& e) {
      throw DataError("dimension '" + columns[i].name + "': " + e.what());
    }
  }
  return out;
}

BaselineModel baseline_train(std::span<const int> y, std::uint64_t seed) {
  if (y.empty()) throw DataError("baseline_train: no labels");
  double positives = 0.0;
  for (int v : y) {
    if (v != 0 && v != 1) throw DataError("labels must be 0 or 1");
    positives += v;
  }
  return {positives / static_cast<double>(y.size()), seed};
}

Labels baseline_predict(const BaselineModel& model, std::size_t n) {
  Rng rng(model.seed);
  Labels out(n);
  for (auto& v : out) v = rng.bernoulli(model.positive_rate) ? 1 : 0;
  return out;
}

nlohmann::json to_json(const LogisticModel& model) {
  std::vector<int> dropped(model.scaling.dropped.begin(),
                           model.scaling.dropped.end());
  nlohmann::json doc = {
      {"schema_version", kModelSchemaVersion},
      {"kind", "logistic_model"},
      {"feature_names", model.feature_names},
      {"standardization",
       {{"means", model.scaling.means},
        {"stds", model.scaling.stds},
        {"dropped", dropped}}},
      {"weights", model.weights},
      {"intercept", model.intercept},
      {"training",
       {{"iterations", model.info.iterations},
        {"final_loss", model.info.final_loss},
        {"final_gradient_norm", model.info.final_gradient_norm},
        {"l2_strength", model.info.l2_strength},
        {"initial_learning_rate", model.info.initial_learning_rate},
        {"final_learning_rate", model.info.final_learning_rate},
        {"converged", model.info.converged},
        {"rows", model.info.rows}}}};
  if (model.interval_level && !model.intervals.empty()) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& ci : model.intervals) {
      nlohmann::json entry = {{"estimable", ci.estimable}};
      if (ci.estimable) {
        entry["std_error"] = ci.std_error;
        entry["low"] = ci.low;
        entry["high"] = ci.high;
        entry["significant"] = ci.significant;
      }
      list.push_back(std::move(entry));
    }
    doc["intervals"] = {{"level", *model.interval_level},
                        {"coefficients", std::move(list)}};
  }
  return doc;
}

LogisticModel logistic_model_from_json(const nlohmann::json& doc) {
  json_util::check_schema(doc, "logistic_model", kModelSchemaVersion);
  LogisticModel m;
  m.feature_names = json_util::get_strings(doc, "feature_names", "model");
  const std::size_t p = m.feature_names.size();
  if (!doc.contains("standardization")) {
    throw DataError("model: missing 'standardization'");
  }
  const auto& s = doc["standardization"];
  m.scaling.means = json_util::get_doubles(s, "means", "model.standardization");
  m.scaling.stds = json_util::get_doubles(s, "stds", "model.standardization");
  for (const auto& d : json_util::get_array(s, "dropped", "model.standardization")) {
    if (!d.is_number_integer()) throw DataError("model: 'dropped' must hold 0/1");
    m.scaling.dropped.push_back(d.get<int>() != 0);
  }
  m.weights = json_util::get_doubles(doc, "weights", "model");
  m.intercept = json_util::get_double(doc, "intercept", "model");
  if (m.scaling.means.size() != p || m.scaling.stds.size() != p ||
      m.scaling.dropped.size() != p || m.weights.size() != p) {
    throw DataError("model: array lengths do not match feature_names");
  }
  for (double sd : m.scaling.stds) {
    if (!(sd > 0.0)) throw DataError("model: standard deviations must be > 0");
  }
  if (doc.contains("training")) {
    const auto& t = doc["training"];
    m.info.iterations = json_util::get_size(t, "iterations", "model.training");
    m.info.final_loss = json_util::get_double(t, "final_loss", "model.training");
    m.info.final_gradient_norm =
        json_util::get_double(t, "final_gradient_norm", "model.training");
    m.info.l2_strength = json_util::get_double(t, "l2_strength", "model.training");
    m.info.initial_learning_rate =
        json_util::get_double(t, "initial_learning_rate", "model.training");
    m.info.final_learning_rate =
        json_util::get_double(t, "final_learning_rate", "model.training");
    if (!t.contains("converged") || !t["converged"].is_boolean()) {
      throw DataError("model.training: 'converged' must be a boolean");
    }
    m.info.converged = t["converged"].get<bool>();
    m.info.rows = json_util::get_size(t, "rows", "model.training");
  }
  if (doc.contains("intervals")) {
    const auto& iv = doc["intervals"];
    m.interval_level = json_util::get_double(iv, "level", "model.intervals");
    const auto& list = json_util::get_array(iv, "coefficients", "model.intervals");
    if (list.size() != p) throw DataError("model: interval count mismatch");
    for (std::size_t j = 0; j < p; ++j) {
      CoefficientInterval ci;
      ci.estimate = m.weights[j];
      if (!list[j].contains("estimable") || !list[j]["estimable"].is_boolean()) {
        throw DataError("model.intervals: 'estimable' must be a boolean");
      }
      ci.estimable = list[j]["estimable"].get<bool>();
      if (ci.estimable) {
        ci.std_error = json_util::get_double(list[j], "std_error", "interval");
        ci.low = json_util::get_double(list[j], "low", "interval");
        ci.high = json_util::get_double(list[j], "high", "interval");
        ci.significant = list[j].value("significant", false);
      }
      m.intervals.push_back(ci);
    }
  }
  return m;
}

void save_model(const LogisticModel& model, const std::string& path) {
  json_util::write_file(to_json(model), path);
}

LogisticModel load_model(const std::string& path) {
  return logistic_model_from_json(json_util::read_file(path));
}

}  // namespace moralframe
