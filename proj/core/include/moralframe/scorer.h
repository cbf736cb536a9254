#ifndef MORALFRAME_SCORER_H_
#define MORALFRAME_SCORER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moralframe/axes.h"
#include "moralframe/embedding_store.h"

namespace moralframe {

// Lowercases, splits on every character that is neither a letter nor an
// apostrophe, and strips apostrophes at token edges. Bytes >= 0x80 count as
// letters so UTF-8 words stay whole; U+2019 is folded to an apostrophe.
std::vector<std::string> tokenize_sequence(std::string_view text);

class TokenBag {
 public:
  TokenBag() = default;

  static TokenBag from_text(std::string_view text);
  static TokenBag from_tokens(std::span<const std::string> tokens);

  void add(const std::string& token, std::uint64_t count = 1);
  // Frequency-wise union.
  void merge(const TokenBag& other);

  const std::map<std::string, std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const { return total_; }
  std::uint64_t count(const std::string& token) const;
  bool empty() const { return counts_.empty(); }

  std::uint64_t in_vocab_total(const EmbeddingStore& store) const;

 private:
  std::map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

inline TokenBag tokenize(std::string_view text) {
  return TokenBag::from_text(text);
}

// Frequency-weighted mean cosine between the axis and the document's
// in-vocabulary words. nullopt when no token has a vector.
std::optional<double> document_bias(const TokenBag& bag,
                                    const SemanticAxis& axis,
                                    const EmbeddingStore& store);

// Bias of the whole corpus pooled into one bag. Throws DataError if the
// corpus is empty or has no in-vocabulary token.
double corpus_baseline(std::span<const TokenBag> corpus,
                       const SemanticAxis& axis, const EmbeddingStore& store);

// Frequency-weighted mean of (cosine - baseline)^2. nullopt when no token
// has a vector.
std::optional<double> document_intensity(const TokenBag& bag,
                                         const SemanticAxis& axis,
                                         double baseline,
                                         const EmbeddingStore& store);

// Computes and stores the corpus baseline of every axis.
void set_baselines(AxisSet& axes, std::span<const TokenBag> corpus,
                   const EmbeddingStore& store);

struct FrameScores {
  std::string document_id;
  std::vector<double> bias;       // one per axis, axis order
  std::vector<double> intensity;  // one per axis, axis order
  // No in-vocabulary token; bias and intensity are all zero.
  bool oov_only = false;

  // (bias, intensity) pairs stacked in axis order.
  std::vector<double> stacked() const;
};

// Throws DataError if a baseline is missing or every token is OOV.
FrameScores frame_features(const TokenBag& bag, const AxisSet& axes,
                           const EmbeddingStore& store,
                           std::string document_id = {});

struct Document {
  std::string id;
  std::string text;
};

// Scores every document; OOV-only documents get zero scores and the
// oov_only flag instead of an error. Documents are split across `threads`
// workers (0 = hardware concurrency); output order matches input order.
std::vector<FrameScores> score_documents(std::span<const Document> documents,
                                         const AxisSet& axes,
                                         const EmbeddingStore& store,
                                         unsigned threads = 1);

// "<dim>_bias", "<dim>_intensity" per axis.
std::vector<std::string> frame_feature_names(const AxisSet& axes);

// CSV with header: id, <dim>_bias, <dim>_intensity ..., oov_only.
void write_scores_csv(std::ostream& out, const AxisSet& axes,
                      std::span<const FrameScores> scores);

}  // namespace moralframe

#endif  // MORALFRAME_SCORER_H_
