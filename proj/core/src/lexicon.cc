#include "moralframe/lexicon.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "moralframe/error.h"

namespace moralframe {
namespace {

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + offset, '\n'));
}

std::string normalize_word(const std::string& raw, std::string_view where) {
  auto first = raw.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    throw DataError(std::string(where) + ": empty word");
  }
  auto last = raw.find_last_not_of(" \t\r\n");
  std::string word = to_lower_ascii(raw.substr(first, last - first + 1));
  if (word.find_first_of(" \t\r\n") != std::string::npos) {
    throw DataError(std::string(where) + ": multi-word entry '" + word +
                    "' is not supported");
  }
  return word;
}

std::set<std::string> parse_pole(const nlohmann::json& dim,
                                 const std::string& key,
                                 const std::string& where) {
  if (!dim.contains(key) || !dim.at(key).is_array()) {
    throw DataError(where + ": '" + key + "' must be a list of words");
  }
  std::set<std::string> words;
  for (const auto& entry : dim.at(key)) {
    if (!entry.is_string()) {
      throw DataError(where + ": '" + key + "' entries must be strings");
    }
    words.insert(normalize_word(entry.get<std::string>(), where));
  }
  if (words.empty()) throw DataError(where + ": empty " + key + " pole");
  return words;
}

}  // namespace

const MicroFrameDef* MoralLexicon::find(std::string_view dimension) const {
  for (const auto& d : dimensions) {
    if (d.name == dimension) return &d;
  }
  return nullptr;
}

std::vector<std::string> MoralLexicon::dimension_names() const {
  std::vector<std::string> names;
  names.reserve(dimensions.size());
  for (const auto& d : dimensions) names.push_back(d.name);
  return names;
}

MoralLexicon parse_lexicon_json(std::string_view text,
                                std::string_view origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string(origin) + ":" +
                    std::to_string(line_of_offset(text, e.byte)) +
                    ": lexicon syntax error: " + e.what());
  }
  if (!doc.is_object()) {
    throw DataError(std::string(origin) + ": lexicon must be a JSON object");
  }

  MoralLexicon lexicon;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) {
      throw DataError(std::string(origin) + ": 'name' must be a string");
    }
    lexicon.name = doc["name"].get<std::string>();
  }
  if (!doc.contains("dimensions") || !doc["dimensions"].is_array() ||
      doc["dimensions"].empty()) {
    throw DataError(std::string(origin) +
                    ": 'dimensions' must be a nonempty list");
  }

  std::size_t index = 0;
  for (const auto& dim : doc["dimensions"]) {
    std::string where =
        std::string(origin) + ": dimension #" + std::to_string(index++);
    if (!dim.is_object() || !dim.contains("name") ||
        !dim["name"].is_string() || dim["name"].get<std::string>().empty()) {
      throw DataError(where + ": every dimension needs a nonempty 'name'");
    }
    MicroFrameDef def;
    def.name = dim["name"].get<std::string>();
    where += " (" + def.name + ")";
    if (lexicon.find(def.name) != nullptr) {
      throw DataError(where + ": duplicate dimension name '" + def.name + "'");
    }
    def.virtues = parse_pole(dim, "virtues", where);
    def.vices = parse_pole(dim, "vices", where);
    for (const auto& word : def.virtues) {
      if (def.vices.count(word)) {
        throw DataError(where + ": word '" + word +
                        "' appears as both virtue and vice");
      }
    }
    lexicon.dimensions.push_back(std::move(def));
  }
  return lexicon;
}

MoralLexicon parse_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_lexicon_json(buffer.str(), path);
}

nlohmann::json to_json(const MoralLexicon& lexicon) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : lexicon.dimensions) {
    nlohmann::json entry;
    entry["name"] = d.name;
    entry["virtues"] = nlohmann::json(
        std::vector<std::string>(d.virtues.begin(), d.virtues.end()));
    entry["vices"] = nlohmann::json(
        std::vector<std::string>(d.vices.begin(), d.vices.end()));
    dims.push_back(std::move(entry));
  }
  return {{"name", lexicon.name}, {"dimensions", std::move(dims)}};
}

void write_lexicon(const MoralLexicon& lexicon, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write lexicon file: " + path);
  out << to_json(lexicon).dump(2) << '\n';
}

const MoralLexicon& default_lexicon() {
  static const MoralLexicon lexicon =
      parse_lexicon_json(default_lexicon_json(), "<default lexicon>");
  return lexicon;
}

std::vector<std::string> LexiconCoverage::missing_words() const {
  std::set<std::string> all;
  for (const auto& d : dimensions) {
    all.insert(d.virtues.missing.begin(), d.virtues.missing.end());
    all.insert(d.vices.missing.begin(), d.vices.missing.end());
  }
  return {all.begin(), all.end()};
}

LexiconCoverage coverage(const MoralLexicon& lexicon,
                         const EmbeddingStore& store) {
  auto check = [&store](const std::set<std::string>& words) {
    PoleCoverage pole;
    for (const auto& w : words) {
      (store.contains(w) ? pole.found : pole.missing).push_back(w);
    }
    return pole;
  };
  LexiconCoverage result;
  for (const auto& d : lexicon.dimensions) {
    result.dimensions.push_back({d.name, check(d.virtues), check(d.vices)});
  }
  return result;
}

nlohmann::json to_json(const LexiconCoverage& coverage) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : coverage.dimensions) {
    dims.push_back({{"name", d.name},
                    {"virtues_found", d.virtues.found.size()},
                    {"virtues_missing", d.virtues.missing},
                    {"vices_found", d.vices.found.size()},
                    {"vices_missing", d.vices.missing}});
  }
  return {{"dimensions", std::move(dims)},
          {"missing_words", coverage.missing_words()}};
}

}  // namespace moralframe
