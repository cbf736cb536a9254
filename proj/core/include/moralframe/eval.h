#ifndef MORALFRAME_EVAL_H_
#define MORALFRAME_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace moralframe {

struct SplitSpec {
  double train_fraction = 0.75;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

// Seeded shuffle, then the first round(fraction * n) ids train. Throws
// DataError for fewer than 2 ids or an empty side, UsageError for a
// fraction outside (0, 1).
Split split(std::span<const std::string> ids, const SplitSpec& spec);
// Same permutation logic over row indices 0..n-1.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, const SplitSpec& spec);

enum class Averaging { kWeighted, kPositiveClass };

struct ConfusionCounts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;

  std::size_t total() const {
    return true_positive + false_positive + true_negative + false_negative;
  }
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  ConfusionCounts counts;
  Averaging averaging = Averaging::kWeighted;
};

// Binary metrics. With kWeighted, per-class precision/recall/F1 are
// averaged with truth-support weights (weighted recall equals accuracy);
// a 0/0 ratio counts as 0.
MetricsReport metrics(std::span<const int> predicted, std::span<const int> truth,
                      Averaging averaging = Averaging::kWeighted);

// Arithmetic mean of the four scores; counts are summed.
MetricsReport mean_metrics(std::span<const MetricsReport> reports);

nlohmann::json to_json(const MetricsReport& report);

struct NamedColumn {
  std::string name;
  std::vector<double> values;
};

struct CorrelationMatrix {
  std::vector<std::string> labels;
  // Row-major; nullopt where a column has zero variance.
  std::vector<std::optional<double>> cells;

  std::size_t size() const { return labels.size(); }
  const std::optional<double>& at(std::size_t i, std::size_t j) const {
    return cells[i * labels.size() + j];
  }
};

double pearson(std::span<const double> x, std::span<const double> y);

// Pairwise Pearson correlations. Throws DataError on length mismatch or
// fewer than two observations.
CorrelationMatrix correlation_matrix(std::span<const NamedColumn> columns);

// Matrix CSV: header "", labels...; undefined cells are written as "NA".
void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m);
nlohmann::json to_json(const CorrelationMatrix& m);

}  // namespace moralframe

#endif  // MORALFRAME_EVAL_H_
