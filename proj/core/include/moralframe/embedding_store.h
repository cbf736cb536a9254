#ifndef MORALFRAME_EMBEDDING_STORE_H_
#define MORALFRAME_EMBEDDING_STORE_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace moralframe {

// Counters gathered while reading a vector file. Blank lines and a detected
// "<count> <dimension>" header line are not counted as read lines, so
// lines_read == entries_kept + duplicates_skipped + malformed_skipped.
struct LoadReport {
  std::size_t lines_read = 0;
  std::size_t entries_kept = 0;
  std::size_t duplicates_skipped = 0;
  std::size_t malformed_skipped = 0;
  bool header_skipped = false;
};

nlohmann::json to_json(const LoadReport& report);

struct LoadOptions {
  std::optional<std::size_t> expected_dimension;
  // Rescale every vector to unit L2 norm after reading.
  bool unit_normalize = false;
};

// Immutable word -> vector table. Keys are lowercased; vectors are stored
// contiguously in insertion (file) order.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::size_t dimension, std::string source_path = {});

  // Appends a word. Returns false (and stores nothing) if the lowercased
  // word is already present. Throws DataError on arity mismatch, non-finite
  // or all-zero vectors.
  bool add(std::string_view word, std::span<const double> vector);

  std::optional<std::span<const double>> lookup(std::string_view word) const;
  bool contains(std::string_view word) const;

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& source_path() const { return source_path_; }

  // Vector of the i-th word in insertion order.
  std::span<const double> vector_at(std::size_t index) const;

 private:
  std::size_t dimension_ = 0;
  std::string source_path_;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LoadedEmbeddings {
  EmbeddingStore store;
  LoadReport report;
};

// Reads a whitespace-separated "word c1 c2 ... cN" text file. Malformed
// lines (wrong arity, unparsable or non-finite numbers, all-zero vectors)
// are skipped and counted; duplicate words keep their first occurrence.
LoadedEmbeddings load_embeddings(const std::string& path,
                                 const LoadOptions& options = {});

// Writes the store in the same text layout with 17 significant digits, so
// load_embeddings(write_embeddings(store)) reproduces every vector exactly.
void write_embeddings(const EmbeddingStore& store, const std::string& path);

std::string to_lower_ascii(std::string_view text);

double dot(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> v);

// dot(u, v) / (|u| |v|), clamped to [-1, 1]. Throws DataError on dimension
// mismatch or a zero-norm argument.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

}  // namespace moralframe

#endif  // MORALFRAME_EMBEDDING_STORE_H_
