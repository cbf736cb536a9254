#include "moralframe/scorer.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "moralframe/csv.h"
#include "moralframe/error.h"

namespace moralframe {
namespace {

bool is_letter(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

// Per-token cosine against one axis with the axis norm hoisted out.
class AxisKernel {
 public:
  explicit AxisKernel(const SemanticAxis& axis)
      : axis_(axis.vector), norm_(l2_norm(axis.vector)) {}

  std::optional<double> cosine(const EmbeddingStore& store,
                               const std::string& word) const {
    auto v = store.lookup(word);
    if (!v) return std::nullopt;
    if (v->size() != axis_.size()) {
      throw DataError("axis dimension " + std::to_string(axis_.size()) +
                      " does not match embedding dimension " +
                      std::to_string(v->size()));
    }
    return std::clamp(dot(axis_, *v) / (norm_ * l2_norm(*v)), -1.0, 1.0);
  }

 private:
  std::span<const double> axis_;
  double norm_;
};

struct Moments {
  double weight = 0.0;
  double weighted_sum = 0.0;
};

Moments bias_moments(const TokenBag& bag, const AxisKernel& kernel,
                     const EmbeddingStore& store) {
  Moments m;
  for (const auto& [token, count] : bag.counts()) {
    auto s = kernel.cosine(store, token);
    if (!s) continue;
    double f = static_cast<double>(count);
    m.weight += f;
    m.weighted_sum += f * *s;
  }
  return m;
}

std::optional<double> intensity_with(const TokenBag& bag,
                                     const AxisKernel& kernel, double baseline,
                                     const EmbeddingStore& store) {
  double weight = 0.0;
  double sum = 0.0;
  for (const auto& [token, count] : bag.counts()) {
    auto s = kernel.cosine(store, token);
    if (!s) continue;
    double f = static_cast<double>(count);
    double d = *s - baseline;
    weight += f;
    sum += f * d * d;
  }
  if (weight == 0.0) return std::nullopt;
  return sum / weight;
}

}  // namespace

std::vector<std::string> tokenize_sequence(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    auto first = current.find_first_not_of('\'');
    if (first != std::string::npos) {
      auto last = current.find_last_not_of('\'');
      tokens.push_back(current.substr(first, last - first + 1));
    }
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c == 0xE2 && i + 2 < text.size() &&
        static_cast<unsigned char>(text[i + 1]) == 0x80 &&
        static_cast<unsigned char>(text[i + 2]) == 0x99) {
      current.push_back('\'');
      i += 2;
    } else if (c == '\'') {
      current.push_back('\'');
    } else if (is_letter(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                             : static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

TokenBag TokenBag::from_text(std::string_view text) {
  return from_tokens(tokenize_sequence(text));
}

TokenBag TokenBag::from_tokens(std::span<const std::string> tokens) {
  TokenBag bag;
  for (const auto& t : tokens) bag.add(t);
  return bag;
}

void TokenBag::add(const std::string& token, std::uint64_t count) {
  if (count == 0 || token.empty()) return;
  counts_[token] += count;
  total_ += count;
}

void TokenBag::merge(const TokenBag& other) {
  for (const auto& [token, count] : other.counts_) add(token, count);
}

std::uint64_t TokenBag::count(const std::string& token) const {
  auto it = counts_.find(token);
  return it == counts_.end() ? 0 : it->second;
}

std::uint64_t TokenBag::in_vocab_total(const EmbeddingStore& store) const {
  std::uint64_t n = 0;
  for (const auto& [token, count] : counts_) {
    if (store.contains(token)) n += count;
  }
  return n;
}

std::optional<double> document_bias(const TokenBag& bag,
                                    const SemanticAxis& axis,
                                    const EmbeddingStore& store) {
  Moments m = bias_moments(bag, AxisKernel(axis), store);
  if (m.weight == 0.0) return std::nullopt;
  return std::clamp(m.weighted_sum / m.weight, -1.0, 1.0);
}

double corpus_baseline(std::span<const TokenBag> corpus,
                       const SemanticAxis& axis, const EmbeddingStore& store) {
  if (corpus.empty()) throw DataError("corpus_baseline: empty corpus");
  TokenBag pooled;
  for (const auto& bag : corpus) pooled.merge(bag);
  auto bias = document_bias(pooled, axis, store);
  if (!bias) {
    throw DataError("corpus_baseline: no in-vocabulary tokens for axis '" +
                    axis.name + "'");
  }
  return *bias;
}

std::optional<double> document_intensity(const TokenBag& bag,
                                         const SemanticAxis& axis,
                                         double baseline,
                                         const EmbeddingStore& store) {
  if (!std::isfinite(baseline)) {
    throw DataError("document_intensity: baseline is not finite");
  }
  return intensity_with(bag, AxisKernel(axis), baseline, store);
}

void set_baselines(AxisSet& axes, std::span<const TokenBag> corpus,
                   const EmbeddingStore& store) {
  if (corpus.empty()) throw DataError("set_baselines: empty corpus");
  TokenBag pooled;
  for (const auto& bag : corpus) pooled.merge(bag);
  std::map<std::string, double> baselines;
  for (const auto& axis : axes.axes) {
    auto bias = document_bias(pooled, axis, store);
    if (!bias) {
      throw DataError("corpus has no in-vocabulary tokens for axis '" +
                      axis.name + "'");
    }
    baselines[axis.name] = *bias;
  }
  axes.baselines = std::move(baselines);
}

std::vector<double> FrameScores::stacked() const {
  std::vector<double> out;
  out.reserve(2 * bias.size());
  for (std::size_t i = 0; i < bias.size(); ++i) {
    out.push_back(bias[i]);
    out.push_back(intensity[i]);
  }
  return out;
}

FrameScores frame_features(const TokenBag& bag, const AxisSet& axes,
                           const EmbeddingStore& store,
                           std::string document_id) {
  FrameScores scores;
  scores.document_id = std::move(document_id);

  // Resolve every in-vocabulary token once; each cosine then serves both
  // the bias and the intensity sums, in the same order as document_bias.
  struct Resolved {
    std::span<const double> vector;
    double norm;
    double count;
  };
  std::vector<Resolved> tokens;
  tokens.reserve(bag.counts().size());
  for (const auto& [token, count] : bag.counts()) {
    auto v = store.lookup(token);
    if (v) tokens.push_back({*v, l2_norm(*v), static_cast<double>(count)});
  }
  if (tokens.empty()) {
    throw DataError("frame_features: document '" + scores.document_id +
                    "' has no in-vocabulary tokens");
  }

  std::vector<double> cosines(tokens.size());
  for (const auto& axis : axes.axes) {
    auto baseline = axes.baseline(axis.name);
    if (!baseline) {
      throw DataError("frame_features: no baseline for axis '" + axis.name +
                      "'");
    }
    if (axis.vector.size() != store.dimension()) {
      throw DataError("axis dimension " + std::to_string(axis.vector.size()) +
                      " does not match embedding dimension " +
                      std::to_string(store.dimension()));
    }
    double axis_norm = l2_norm(axis.vector);
    double weight = 0.0;
    double weighted_sum = 0.0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      cosines[t] = std::clamp(
          dot(axis.vector, tokens[t].vector) / (axis_norm * tokens[t].norm),
          -1.0, 1.0);
      weight += tokens[t].count;
      weighted_sum += tokens[t].count * cosines[t];
    }
    double spread = 0.0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      double d = cosines[t] - *baseline;
      spread += tokens[t].count * d * d;
    }
    scores.bias.push_back(std::clamp(weighted_sum / weight, -1.0, 1.0));
    scores.intensity.push_back(spread / weight);
  }
  return scores;
}

std::vector<FrameScores> score_documents(std::span<const Document> documents,
                                         const AxisSet& axes,
                                         const EmbeddingStore& store,
                                         unsigned threads) {
  if (!axes.has_all_baselines()) {
    throw DataError("score_documents: axis set has no baselines");
  }
  std::vector<FrameScores> out(documents.size());
  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      TokenBag bag = TokenBag::from_text(documents[i].text);
      if (bag.in_vocab_total(store) == 0) {
        FrameScores& s = out[i];
        s.document_id = documents[i].id;
        s.bias.assign(axes.axes.size(), 0.0);
        s.intensity.assign(axes.axes.size(), 0.0);
        s.oov_only = true;
      } else {
        out[i] = frame_features(bag, axes, store, documents[i].id);
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::size_t n = documents.size();
  std::size_t workers = std::min<std::size_t>(threads, n / 64 + 1);
  if (workers <= 1) {
    score_range(0, n);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      std::size_t begin = w * chunk;
      std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) continue;
      pool.emplace_back([&, w, begin, end] {
        try {
          score_range(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<std::string> frame_feature_names(const AxisSet& axes) {
  std::vector<std::string> names;
  for (const auto& axis : axes.axes) {
    names.push_back(axis.name + "_bias");
    names.push_back(axis.name + "_intensity");
  }
  return names;
}

void write_scores_csv(std::ostream& out, const AxisSet& axes,
                      std::span<const FrameScores> scores) {
  std::vector<std::string> header = {"id"};
  for (auto& name : frame_feature_names(axes)) header.push_back(name);
  header.push_back("oov_only");
  write_csv_row(out, header);
  for (const auto& s : scores) {
    std::vector<std::string> row = {s.document_id};
    for (double v : s.stacked()) row.push_back(format_double(v));
    row.push_back(s.oov_only ? "1" : "0");
    write_csv_row(out, row);
  }
}

}  // namespace moralframe
