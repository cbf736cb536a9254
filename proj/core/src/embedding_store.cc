#include "moralframe/embedding_store.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "moralframe/error.h"

namespace moralframe {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' ||
         c == '\f';
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool parse_double(std::string_view text, double* out) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, *out);
  return ec == std::errc() && ptr == end && std::isfinite(*out);
}

bool parse_positive_int(std::string_view text, std::size_t* out) {
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), *out);
  return ec == std::errc() && ptr == text.data() + text.size() && *out > 0;
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

nlohmann::json to_json(const LoadReport& report) {
  return {{"lines_read", report.lines_read},
          {"entries_kept", report.entries_kept},
          {"duplicates_skipped", report.duplicates_skipped},
          {"malformed_skipped", report.malformed_skipped},
          {"header_skipped", report.header_skipped}};
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

EmbeddingStore::EmbeddingStore(std::size_t dimension, std::string source_path)
    : dimension_(dimension), source_path_(std::move(source_path)) {
  if (dimension_ == 0) throw DataError("embedding dimension must be >= 1");
}

bool EmbeddingStore::add(std::string_view word, std::span<const double> vector) {
  if (vector.size() != dimension_) {
    throw DataError("vector for '" + std::string(word) + "' has " +
                    std::to_string(vector.size()) + " components, expected " +
                    std::to_string(dimension_));
  }
  for (double x : vector) {
    if (!std::isfinite(x)) {
      throw DataError("non-finite component in vector for '" +
                      std::string(word) + "'");
    }
  }
  if (all_zero(vector)) {
    throw DataError("all-zero vector for '" + std::string(word) + "'");
  }
  std::string key = to_lower_ascii(word);
  if (key.empty()) throw DataError("empty word");
  auto [it, inserted] = index_.emplace(key, words_.size());
  if (!inserted) return false;
  words_.push_back(std::move(key));
  data_.insert(data_.end(), vector.begin(), vector.end());
  return true;
}

std::optional<std::span<const double>> EmbeddingStore::lookup(
    std::string_view word) const {
  auto it = index_.find(to_lower_ascii(word));
  if (it == index_.end()) return std::nullopt;
  return vector_at(it->second);
}

bool EmbeddingStore::contains(std::string_view word) const {
  return index_.count(to_lower_ascii(word)) > 0;
}

std::span<const double> EmbeddingStore::vector_at(std::size_t index) const {
  return std::span<const double>(data_).subspan(index * dimension_,
                                                dimension_);
}

LoadedEmbeddings load_embeddings(const std::string& path,
                                 const LoadOptions& options) {
  if (options.expected_dimension && *options.expected_dimension == 0) {
    throw UsageError("expected_dimension must be >= 1");
  }
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);

  LoadReport report;
  std::optional<std::size_t> dimension = options.expected_dimension;
  std::optional<EmbeddingStore> store;
  std::vector<double> values;
  std::string line;
  bool seen_content = false;

  while (std::getline(in, line)) {
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;

    if (!seen_content) {
      seen_content = true;
      std::size_t count = 0;
      std::size_t header_dim = 0;
      if (fields.size() == 2 && parse_positive_int(fields[0], &count) &&
          parse_positive_int(fields[1], &header_dim)) {
        if (dimension && *dimension != header_dim) {
          throw DataError("header declares dimension " +
                          std::to_string(header_dim) + " but " +
                          std::to_string(*dimension) + " was expected: " +
                          path);
        }
        dimension = header_dim;
        report.header_skipped = true;
        continue;
      }
    }

    ++report.lines_read;
    values.clear();
    bool numeric = true;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double x = 0.0;
      if (!parse_double(fields[i], &x)) {
        numeric = false;
        break;
      }
      values.push_back(x);
    }
    if (!numeric || values.empty()) {
      ++report.malformed_skipped;
      continue;
    }

    if (!store) {
      // First well-formed line fixes the dimension (or must agree with it).
      if (dimension && *dimension != values.size()) {
        if (!report.header_skipped) {
          throw DataError("first vector line has dimension " +
                          std::to_string(values.size()) + " but " +
                          std::to_string(*dimension) + " was expected: " +
                          path);
        }
        ++report.malformed_skipped;
        continue;
      }
      store.emplace(values.size(), path);
    }

    if (values.size() != store->dimension() || all_zero(values)) {
      ++report.malformed_skipped;
      continue;
    }
    if (options.unit_normalize) {
      double norm = l2_norm(values);
      for (double& x : values) x /= norm;
    }
    if (store->add(fields[0], values)) {
      ++report.entries_kept;
    } else {
      ++report.duplicates_skipped;
    }
  }

  if (!store || store->size() == 0) {
    throw DataError("no well-formed vector lines in " + path);
  }
  return {std::move(*store), report};
}

void write_embeddings(const EmbeddingStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embedding file: " + path);
  char buffer[32];
  for (std::size_t i = 0; i < store.size(); ++i) {
    out << store.words()[i];
    for (double x : store.vector_at(i)) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", x);
      out << ' ' << buffer;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

double dot(std::span<const double> u, std::span<const double> v) {
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
  return sum;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine_similarity(std::span<const double> u,
                         std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DataError("cosine_similarity: dimension mismatch (" +
                    std::to_string(u.size()) + " vs " +
                    std::to_string(v.size()) + ")");
  }
  double nu = l2_norm(u);
  double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) {
    throw DataError("cosine_similarity: zero-norm vector");
  }
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

}  // namespace moralframe
