#ifndef MORALFRAME_CLASSIFIER_H_
#define MORALFRAME_CLASSIFIER_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace moralframe {

using Labels = std::vector<int>;

// Dense row-major feature table with one id per row.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<std::string> feature_names);

  void add_row(std::string id, std::span<const double> features);

  std::size_t rows() const { return ids_.size(); }
  std::size_t cols() const { return feature_names_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }
  const std::vector<double>& values() const { return values_; }
  std::span<const double> row(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const {
    return values_[r * cols() + c];
  }
  std::vector<double> column(std::size_t c) const;

  std::optional<std::size_t> find_row(const std::string& id) const;
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> feature_names_;
  std::vector<double> values_;
};

// Columnwise concatenation of two matrices with identical id order. Throws
// DataError when ids differ or feature names collide.
FeatureMatrix concat_columns(const FeatureMatrix& left,
                             const FeatureMatrix& right);

struct TrainConfig {
  double l2_strength = 1.0;
  double learning_rate = 0.1;
  std::size_t max_iterations = 5000;
  double tolerance = 1e-6;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc,
                                   TrainConfig defaults = {});

// Training-set column statistics. Columns with (near-)zero spread are
// dropped: their weight stays 0 and they are ignored at inference.
struct Standardization {
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<bool> dropped;

  std::size_t kept() const;
};

Standardization fit_standardization(const FeatureMatrix& x);

struct TrainingInfo {
  std::size_t iterations = 0;
  double final_loss = 0.0;
  double final_gradient_norm = 0.0;  // max-norm
  double l2_strength = 0.0;
  double initial_learning_rate = 0.0;
  double final_learning_rate = 0.0;
  bool converged = false;
  std::size_t rows = 0;
  // Per-iteration accepted loss; not persisted.
  std::vector<double> loss_history;
};

struct CoefficientInterval {
  double estimate = 0.0;
  double std_error = 0.0;
  double low = 0.0;
  double high = 0.0;
  bool estimable = false;
  bool significant = false;
};

struct LogisticModel {
  std::vector<std::string> feature_names;
  Standardization scaling;
  // Coefficients on standardized features, aligned to feature_names.
  std::vector<double> weights;
  double intercept = 0.0;
  TrainingInfo info;
  std::optional<double> interval_level;
  std::vector<CoefficientInterval> intervals;  // empty or one per weight
};

// Mean regularized negative log-likelihood on already standardized rows:
//   (1/n) sum_i [log(1 + exp(z_i)) - y_i z_i] + l2 / (2n) |w|^2,
//   z_i = w . x_i + b.
// The intercept is not penalized.
struct ObjectiveValue {
  double loss = 0.0;
  std::vector<double> weight_gradient;
  double intercept_gradient = 0.0;
};

ObjectiveValue logistic_objective(const FeatureMatrix& standardized,
                                  std::span<const int> y,
                                  std::span<const double> weights,
                                  double intercept, double l2_strength);

// Full-batch gradient descent on standardized features. The step is halved
// whenever it would increase the loss, so the loss history never rises.
// Stops when the max-norm of the gradient drops below config.tolerance or
// after config.max_iterations. Throws DataError for single-class labels,
// non-finite features, bad configs or divergence.
LogisticModel train_logistic(const FeatureMatrix& x, std::span<const int> y,
                             const TrainConfig& config = {});

double predict_proba(const LogisticModel& model, std::span<const double> x);
int predict_label(const LogisticModel& model, std::span<const double> x,
                  double threshold = 0.5);
std::vector<double> predict_proba(const LogisticModel& model,
                                  const FeatureMatrix& x);

// Two-sided standard normal quantile z with P(|Z| <= z) = level.
double normal_two_sided_quantile(double level);

// Wald intervals from the inverse of the regularized observed information
// of the sum-scale objective at the fitted parameters. Columns that were
// dropped or whose variance cannot be determined are marked !estimable.
std::vector<CoefficientInterval> coefficient_intervals(
    const LogisticModel& model, const FeatureMatrix& x, std::span<const int> y,
    double level = 0.95);

// Computes intervals and stores them in the model.
void attach_intervals(LogisticModel& model, const FeatureMatrix& x,
                      std::span<const int> y, double level = 0.95);

struct LabelColumn {
  std::string name;
  Labels labels;
};

struct NamedModel {
  std::string name;
  LogisticModel model;
};

// One independent binary model per column, in column order. Columns are
// trained on up to `threads` workers (0 = hardware concurrency).
std::vector<NamedModel> train_multilabel(const FeatureMatrix& x,
                                         std::span<const LabelColumn> columns,
                                         const TrainConfig& config = {},
                                         unsigned threads = 1);

// Predicts 1 with probability positive_rate, independently per row.
struct BaselineModel {
  double positive_rate = 0.0;
  std::uint64_t seed = 0;
};

BaselineModel baseline_train(std::span<const int> y, std::uint64_t seed);
Labels baseline_predict(const BaselineModel& model, std::size_t n);

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json to_json(const LogisticModel& model);
// Throws DataError on missing fields or non-finite numbers and
// SchemaVersionError for other versions.
LogisticModel logistic_model_from_json(const nlohmann::json& doc);

void save_model(const LogisticModel& model, const std::string& path);
LogisticModel load_model(const std::string& path);

}  // namespace moralframe

#endif  // MORALFRAME_CLASSIFIER_H_
