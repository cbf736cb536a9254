#ifndef MORALFRAME_AXES_H_
#define MORALFRAME_AXES_H_

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "moralframe/embedding_store.h"
#include "moralframe/lexicon.h"

namespace moralframe {

// Axis norms below this are rejected as degenerate.
inline constexpr double kDegenerateAxisNorm = 1e-12;

struct SemanticAxis {
  std::string name;
  // mean(virtue vectors) - mean(vice vectors), unnormalized.
  std::vector<double> vector;
  std::size_t virtue_words_used = 0;
  std::size_t vice_words_used = 0;
};

struct AxisSet {
  std::vector<SemanticAxis> axes;
  std::size_t embedding_dimension = 0;
  // Corpus-level bias per dimension name; filled by set_baselines().
  std::map<std::string, double> baselines;

  const SemanticAxis* find(const std::string& name) const;
  std::optional<double> baseline(const std::string& name) const;
  bool has_all_baselines() const;
  std::vector<std::string> names() const;
};

// Builds one axis from word sets. Words without a vector are skipped but not
// counted. Throws DataError if either pole has no in-vocabulary word or the
// result has norm below kDegenerateAxisNorm.
SemanticAxis build_axis(const EmbeddingStore& store, const std::string& name,
                        const std::set<std::string>& virtues,
                        const std::set<std::string>& vices);

AxisSet build_axis_set(const EmbeddingStore& store,
                       const MoralLexicon& lexicon);

inline constexpr int kAxisSetSchemaVersion = 1;

nlohmann::json to_json(const AxisSet& axes);
// Throws DataError on malformed documents and SchemaVersionError on a
// version other than kAxisSetSchemaVersion.
AxisSet axis_set_from_json(const nlohmann::json& doc);

void save_axis_set(const AxisSet& axes, const std::string& path);
AxisSet load_axis_set(const std::string& path);

}  // namespace moralframe

#endif  // MORALFRAME_AXES_H_
