#ifndef MORALFRAME_LEXICON_H_
#define MORALFRAME_LEXICON_H_

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "moralframe/embedding_store.h"

namespace moralframe {

// One micro-frame: a virtue pole and a vice pole of exact-match words.
struct MicroFrameDef {
  std::string name;
  std::set<std::string> virtues;
  std::set<std::string> vices;
};

struct MoralLexicon {
  std::string name;
  std::vector<MicroFrameDef> dimensions;

  const MicroFrameDef* find(std::string_view dimension) const;
  std::vector<std::string> dimension_names() const;
};

// Parses the lexicon JSON layout:
//   {"name": "...", "dimensions": [{"name": "care",
//                                   "virtues": ["care", ...],
//                                   "vices": ["harm", ...]}, ...]}
// Words are trimmed and lowercased. Throws DataError on syntax errors (with
// line number), duplicate dimension names, empty poles, multi-word entries or
// a word listed on both poles of a dimension.
MoralLexicon parse_lexicon_json(std::string_view text,
                                std::string_view origin = "<memory>");
MoralLexicon parse_lexicon(const std::string& path);

// Canonical form: dimensions in declared order, words sorted.
nlohmann::json to_json(const MoralLexicon& lexicon);
void write_lexicon(const MoralLexicon& lexicon, const std::string& path);

// The six-dimension lexicon shipped with the library (care, fairness,
// ingroup, authority, purity, morality).
const MoralLexicon& default_lexicon();
std::string_view default_lexicon_json();

struct PoleCoverage {
  std::vector<std::string> found;
  std::vector<std::string> missing;
};

struct DimensionCoverage {
  std::string name;
  PoleCoverage virtues;
  PoleCoverage vices;
};

struct LexiconCoverage {
  std::vector<DimensionCoverage> dimensions;

  // Sorted, de-duplicated union of missing words over all dimensions.
  std::vector<std::string> missing_words() const;
};

LexiconCoverage coverage(const MoralLexicon& lexicon,
                         const EmbeddingStore& store);

nlohmann::json to_json(const LexiconCoverage& coverage);

}  // namespace moralframe

#endif  // MORALFRAME_LEXICON_H_
