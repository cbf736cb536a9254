#include "moralframe/axes.h"

#include <cmath>
#include <fstream>

#include "moralframe/error.h"
#include "json_util.h"

namespace moralframe {
namespace {

// Componentwise mean of the vectors of in-vocabulary words.
std::size_t accumulate_mean(const EmbeddingStore& store,
                            const std::set<std::string>& words,
                            std::vector<double>* mean) {
  mean->assign(store.dimension(), 0.0);
  std::size_t used = 0;
  for (const auto& w : words) {
    auto v = store.lookup(w);
    if (!v) continue;
    for (std::size_t i = 0; i < mean->size(); ++i) (*mean)[i] += (*v)[i];
    ++used;
  }
  if (used > 0) {
    for (double& x : *mean) x /= static_cast<double>(used);
  }
  return used;
}

}  // namespace

const SemanticAxis* AxisSet::find(const std::string& name) const {
  for (const auto& a : axes) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

std::optional<double> AxisSet::baseline(const std::string& name) const {
  auto it = baselines.find(name);
  if (it == baselines.end()) return std::nullopt;
  return it->second;
}

bool AxisSet::has_all_baselines() const {
  for (const auto& a : axes) {
    if (!baselines.count(a.name)) return false;
  }
  return true;
}

std::vector<std::string> AxisSet::names() const {
  std::vector<std::string> out;
  for (const auto& a : axes) out.push_back(a.name);
  return out;
}

SemanticAxis build_axis(const EmbeddingStore& store, const std::string& name,
                        const std::set<std::string>& virtues,
                        const std::set<std::string>& vices) {
  SemanticAxis axis;
  axis.name = name;
  std::vector<double> virtue_mean;
  std::vector<double> vice_mean;
  axis.virtue_words_used = accumulate_mean(store, virtues, &virtue_mean);
  axis.vice_words_used = accumulate_mean(store, vices, &vice_mean);
  if (axis.virtue_words_used == 0) {
    throw DataError("axis '" + name + "': no virtue word has a vector");
  }
  if (axis.vice_words_used == 0) {
    throw DataError("axis '" + name + "': no vice word has a vector");
  }
  axis.vector.resize(store.dimension());
  for (std::size_t i = 0; i < axis.vector.size(); ++i) {
    axis.vector[i] = virtue_mean[i] - vice_mean[i];
  }
  if (l2_norm(axis.vector) < kDegenerateAxisNorm) {
    throw DataError("axis '" + name +
                    "' is degenerate: virtue and vice means coincide");
  }
  return axis;
}

AxisSet build_axis_set(const EmbeddingStore& store,
                       const MoralLexicon& lexicon) {
  AxisSet set;
  set.embedding_dimension = store.dimension();
  for (const auto& d : lexicon.dimensions) {
    try {
      set.axes.push_back(build_axis(store, d.name, d.virtues, d.vices));
    } catch (const DataError& e) {
      throw DataError("dimension '" + d.name + "': " + e.what());
    }
  }
  return set;
}

nlohmann::json to_json(const AxisSet& axes) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& a : axes.axes) {
    list.push_back({{"name", a.name},
                    {"vector", a.vector},
                    {"virtue_words_used", a.virtue_words_used},
                    {"vice_words_used", a.vice_words_used}});
  }
  nlohmann::json doc = {{"schema_version", kAxisSetSchemaVersion},
                        {"kind", "axis_set"},
                        {"embedding_dimension", axes.embedding_dimension},
                        {"axes", std::move(list)}};
  if (!axes.baselines.empty()) doc["baselines"] = axes.baselines;
  return doc;
}

AxisSet axis_set_from_json(const nlohmann::json& doc) {
  json_util::check_schema(doc, "axis_set", kAxisSetSchemaVersion);
  AxisSet set;
  set.embedding_dimension =
      json_util::get_size(doc, "embedding_dimension", "axis set");
  for (const auto& a : json_util::get_array(doc, "axes", "axis set")) {
    SemanticAxis axis;
    axis.name = json_util::get_string(a, "name", "axis");
    axis.vector = json_util::get_doubles(a, "vector", "axis " + axis.name);
    axis.virtue_words_used =
        json_util::get_size(a, "virtue_words_used", "axis " + axis.name);
    axis.vice_words_used =
        json_util::get_size(a, "vice_words_used", "axis " + axis.name);
    if (axis.vector.size() != set.embedding_dimension) {
      throw DataError("axis '" + axis.name + "' has " +
                      std::to_string(axis.vector.size()) +
                      " components, expected " +
                      std::to_string(set.embedding_dimension));
    }
    if (l2_norm(axis.vector) < kDegenerateAxisNorm) {
      throw DataError("axis '" + axis.name + "' is degenerate");
    }
    set.axes.push_back(std::move(axis));
  }
  if (doc.contains("baselines")) {
    const auto& b = doc["baselines"];
    if (!b.is_object()) throw DataError("axis set: 'baselines' must be an object");
    for (const auto& [name, value] : b.items()) {
      if (!set.find(name)) {
        throw DataError("axis set: baseline for unknown axis '" + name + "'");
      }
      set.baselines[name] = json_util::as_finite(value, "baseline " + name);
    }
  }
  return set;
}

void save_axis_set(const AxisSet& axes, const std::string& path) {
  json_util::write_file(to_json(axes), path);
}

AxisSet load_axis_set(const std::string& path) {
  return axis_set_from_json(json_util::read_file(path));
}

}  // namespace moralframe
