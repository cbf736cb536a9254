#include "moralframe/eval.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "moralframe/csv.h"
#include "moralframe/error.h"
#include "moralframe/random.h"

namespace moralframe {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double precision, double recall) {
  double s = precision + recall;
  return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw UsageError("train fraction must lie in (0, 1)");
  }
  if (n < 2) throw DataError("split: need at least 2 items");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(order);
  auto train_size = static_cast<std::size_t>(
      std::llround(spec.train_fraction * static_cast<double>(n)));
  if (train_size == 0 || train_size >= n) {
    throw DataError("split: fraction " + format_double(spec.train_fraction) +
                    " of " + std::to_string(n) + " leaves one side empty");
  }
  std::vector<std::size_t> train(order.begin(), order.begin() + train_size);
  std::vector<std::size_t> test(order.begin() + train_size, order.end());
  return {std::move(train), std::move(test)};
}

Split split(std::span<const std::string> ids, const SplitSpec& spec) {
  auto [train, test] = split_indices(ids.size(), spec);
  Split out;
  for (auto i : train) out.train.push_back(ids[i]);
  for (auto i : test) out.test.push_back(ids[i]);
  return out;
}

MetricsReport metrics(std::span<const int> predicted, std::span<const int> truth,
                      Averaging averaging) {
  if (predicted.size() != truth.size()) {
    throw DataError("metrics: predicted and truth lengths differ");
  }
  if (truth.empty()) throw DataError("metrics: no observations");
  MetricsReport r;
  r.averaging = averaging;
  ConfusionCounts& c = r.counts;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    bool p = predicted[i] != 0;
    bool t = truth[i] != 0;
    if (p && t) ++c.true_positive;
    else if (p) ++c.false_positive;
    else if (t) ++c.false_negative;
    else ++c.true_negative;
  }
  const std::size_t n = c.total();
  r.accuracy = ratio(c.true_positive + c.true_negative, n);

  double p1 = ratio(c.true_positive, c.true_positive + c.false_positive);
  double r1 = ratio(c.true_positive, c.true_positive + c.false_negative);
  double f1 = f1_of(p1, r1);
  if (averaging == Averaging::kPositiveClass) {
    r.precision = p1;
    r.recall = r1;
    r.f1 = f1;
    return r;
  }
  double p0 = ratio(c.true_negative, c.true_negative + c.false_negative);
  double r0 = ratio(c.true_negative, c.true_negative + c.false_positive);
  double f0 = f1_of(p0, r0);
  double w1 = ratio(c.true_positive + c.false_negative, n);
  double w0 = ratio(c.true_negative + c.false_positive, n);
  r.precision = w0 * p0 + w1 * p1;
  r.recall = w0 * r0 + w1 * r1;
  r.f1 = w0 * f0 + w1 * f1;
  return r;
}

MetricsReport mean_metrics(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw DataError("mean_metrics: no reports");
  MetricsReport out;
  out.averaging = reports.front().averaging;
  for (const auto& r : reports) {
    out.precision += r.precision;
    out.recall += r.recall;
    out.f1 += r.f1;
    out.accuracy += r.accuracy;
    out.counts.true_positive += r.counts.true_positive;
    out.counts.false_positive += r.counts.false_positive;
    out.counts.true_negative += r.counts.true_negative;
    out.counts.false_negative += r.counts.false_negative;
  }
  const double n = static_cast<double>(reports.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  out.accuracy /= n;
  return out;
}

nlohmann::json to_json(const MetricsReport& report) {
  return {{"precision", report.precision},
          {"recall", report.recall},
          {"f1", report.f1},
          {"accuracy", report.accuracy},
          {"averaging", report.averaging == Averaging::kWeighted
                            ? "weighted"
                            : "positive_class"},
          {"counts",
           {{"tp", report.counts.true_positive},
            {"fp", report.counts.false_positive},
            {"tn", report.counts.true_negative},
            {"fn", report.counts.false_negative}}}};
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: length mismatch");
  if (x.size() < 2) throw DataError("pearson: need at least 2 observations");
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx;
    double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(std::span<const NamedColumn> columns) {
  CorrelationMatrix m;
  const std::size_t k = columns.size();
  for (const auto& c : columns) {
    if (c.values.size() != columns.front().values.size()) {
      throw DataError("correlation_matrix: column '" + c.name +
                      "' has a different length");
    }
    m.labels.push_back(c.name);
  }
  if (k > 0 && columns.front().values.size() < 2) {
    throw DataError("correlation_matrix: need at least 2 observations");
  }
  m.cells.assign(k * k, std::nullopt);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double r = pearson(columns[i].values, columns[j].values);
      if (std::isnan(r)) continue;
      if (i == j) r = 1.0;
      m.cells[i * k + j] = r;
      m.cells[j * k + i] = r;
    }
  }
  return m;
}

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m) {
  std::vector<std::string> header = {""};
  header.insert(header.end(), m.labels.begin(), m.labels.end());
  write_csv_row(out, header);
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::vector<std::string> row = {m.labels[i]};
    for (std::size_t j = 0; j < m.size(); ++j) {
      const auto& cell = m.at(i, j);
      row.push_back(cell ? format_double(*cell) : "NA");
    }
    write_csv_row(out, row);
  }
}

nlohmann::json to_json(const CorrelationMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.size(); ++j) {
      const auto& cell = m.at(i, j);
      row.push_back(cell ? nlohmann::json(*cell) : nlohmann::json(nullptr));
    }
    rows.push_back(std::move(row));
  }
  return {{"labels", m.labels}, {"matrix", std::move(rows)}};
}

}  // namespace moralframe
