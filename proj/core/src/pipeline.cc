#include "moralframe/pipeline.h"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "moralframe/csv.h"
#include "moralframe/error.h"
#include "moralframe/random.h"
#include "json_util.h"

namespace moralframe {
namespace {

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::optional<int> parse_count(std::string_view field) {
  std::string t = trim(field);
  if (t.empty()) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec == std::errc() && ptr == t.data() + t.size()) return value;
  // Accept integral floats such as "2.0".
  auto d = parse_double_field(t);
  if (d && *d == static_cast<double>(static_cast<long long>(*d)) &&
      std::abs(*d) < 1e9) {
    return static_cast<int>(*d);
  }
  return std::nullopt;
}

std::vector<std::string> keyword_tokens(const std::string& keyword) {
  return tokenize_sequence(keyword);
}

bool contains_sequence(const std::vector<std::string>& haystack,
                       const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

std::vector<TokenBag> bags_of(std::span<const Document> docs,
                              std::span<const std::size_t> rows) {
  std::vector<TokenBag> bags;
  bags.reserve(rows.size());
  for (auto r : rows) bags.push_back(TokenBag::from_text(docs[r].text));
  return bags;
}

// Frame features for `docs` with baselines taken from docs[train_rows].
FeatureMatrix split_frame_features(const FrameResources& frame,
                                   std::span<const Document> docs,
                                   std::span<const std::size_t> train_rows,
                                   std::size_t* oov, unsigned threads) {
  AxisSet axes = frame.axes;
  auto bags = bags_of(docs, train_rows);
  set_baselines(axes, bags, frame.store);
  return frame_feature_matrix(docs, axes, frame.store, oov, threads);
}

Labels select_labels(const Labels& labels, std::span<const std::size_t> rows) {
  Labels out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

Labels predict_labels(const LogisticModel& model, const FeatureMatrix& x) {
  Labels out;
  out.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    out.push_back(predict_label(model, x.row(r)));
  }
  return out;
}

std::vector<std::string> metric_fields(const MetricsReport& r) {
  return {format_double(r.precision), format_double(r.recall),
          format_double(r.f1), format_double(r.accuracy)};
}

std::string safe_file_stem(const std::string& name) {
  std::string out;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "_" : out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kFrameAxis: return "frame_axis";
    case FeatureMode::kExternal: return "external";
    case FeatureMode::kCombined: return "combined";
  }
  return "unknown";
}

FeatureMode parse_feature_mode(std::string_view text) {
  if (text == "frame_axis") return FeatureMode::kFrameAxis;
  if (text == "external") return FeatureMode::kExternal;
  if (text == "combined") return FeatureMode::kCombined;
  throw UsageError("unknown feature mode '" + std::string(text) +
                   "' (expected frame_axis, external or combined)");
}

std::string to_string(PartisanMode mode) {
  switch (mode) {
    case PartisanMode::kMfLikelihood: return "mf_likelihood";
    case PartisanMode::kFrameAxis: return "frame_axis";
    case PartisanMode::kCombined: return "mf_likelihood+frame_axis";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Leanings and topics

std::optional<int> LeaningMap::leaning(std::string_view source) const {
  auto it = sources.find(to_lower_ascii(trim(source)));
  if (it == sources.end()) return std::nullopt;
  return it->second;
}

LeaningMap parse_leanings_json(std::string_view text, std::string_view origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string(origin) + ": invalid JSON: " + e.what());
  }
  const nlohmann::json& map =
      doc.is_object() && doc.contains("leanings") ? doc["leanings"] : doc;
  if (!map.is_object()) {
    throw DataError(std::string(origin) + ": leanings must be an object");
  }
  LeaningMap out;
  for (const auto& [source, value] : map.items()) {
    if (!source.empty() && source[0] == '_') continue;
    std::optional<int> leaning;
    if (value.is_string()) {
      std::string v = to_lower_ascii(value.get<std::string>());
      if (v == "liberal" || v == "left" || v == "lean left") leaning = 1;
      else if (v == "conservative" || v == "right" || v == "lean right") leaning = 0;
      else if (v != "center" && v != "centre" && v != "central") {
        throw DataError(std::string(origin) + ": unknown leaning '" + v +
                        "' for source '" + source + "'");
      }
    } else if (value.is_number_integer() &&
               (value.get<int>() == 0 || value.get<int>() == 1)) {
      leaning = value.get<int>();
    } else if (!value.is_null()) {
      throw DataError(std::string(origin) + ": bad leaning for source '" +
                      source + "'");
    }
    out.sources[to_lower_ascii(trim(source))] = leaning;
  }
  return out;
}

LeaningMap load_leanings(const std::string& path) {
  return parse_leanings_json(read_text_file(path), path);
}

TopicKeywords parse_topics_json(std::string_view text, std::string_view origin) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw DataError(std::string(origin) + ": invalid JSON: " + e.what());
  }
  const nlohmann::ordered_json& map =
      doc.is_object() && doc.contains("topics") ? doc["topics"] : doc;
  if (!map.is_object()) {
    throw DataError(std::string(origin) + ": topics must be an object");
  }
  TopicKeywords out;
  for (const auto& [topic, words] : map.items()) {
    if (!topic.empty() && topic[0] == '_') continue;
    if (!words.is_array() || words.empty()) {
      throw DataError(std::string(origin) + ": topic '" + topic +
                      "' needs a nonempty keyword list");
    }
    std::vector<std::string> keywords;
    for (const auto& w : words) {
      if (!w.is_string() || keyword_tokens(w.get<std::string>()).empty()) {
        throw DataError(std::string(origin) + ": bad keyword in topic '" +
                        topic + "'");
      }
      keywords.push_back(w.get<std::string>());
    }
    out.emplace_back(topic, std::move(keywords));
  }
  if (out.empty()) throw DataError(std::string(origin) + ": no topics");
  return out;
}

TopicKeywords load_topics(const std::string& path) {
  return parse_topics_json(read_text_file(path), path);
}

std::vector<std::string> match_topics(std::string_view text,
                                      const TopicKeywords& topics) {
  auto tokens = tokenize_sequence(text);
  std::vector<std::string> matched;
  for (const auto& [topic, keywords] : topics) {
    for (const auto& k : keywords) {
      if (contains_sequence(tokens, keyword_tokens(k))) {
        matched.push_back(topic);
        break;
      }
    }
  }
  return matched;
}

HeadlineSet ingest_headlines(const std::string& path, const LeaningMap& leanings,
                             const TopicKeywords& topics, bool filter_topics) {
  CsvTable table = read_csv(path);
  auto text_col = table.find_any({"headline", "title", "text"});
  auto source_col = table.find_any({"publication", "source"});
  auto id_col = table.column("id");
  if (!text_col || !source_col) {
    throw DataError(path +
                    ": headline CSV needs a text column (headline/title/text) "
                    "and a source column (publication/source)");
  }
  HeadlineSet out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ++out.report.rows_read;
    HeadlineRecord rec;
    rec.id = id_col ? trim(row[*id_col]) : std::to_string(r + 1);
    if (rec.id.empty()) rec.id = std::to_string(r + 1);
    rec.text = trim(row[*text_col]);
    rec.source = trim(row[*source_col]);
    if (rec.text.empty()) {
      ++out.report.dropped_empty_text;
      continue;
    }
    auto leaning = leanings.leaning(rec.source);
    if (!leaning) {
      ++out.report.dropped_unmapped_source;
      continue;
    }
    rec.leaning = *leaning;
    rec.topics = match_topics(rec.text, topics);
    if (filter_topics && rec.topics.empty()) {
      ++out.report.dropped_no_topic;
      continue;
    }
    if (!seen.insert(rec.id).second) {
      throw DataError(path + ": duplicate headline id '" + rec.id + "'");
    }
    out.records.push_back(std::move(rec));
    ++out.report.kept;
  }
  if (out.records.empty()) {
    throw DataError(path + ": no headlines left after filtering");
  }
  return out;
}

std::vector<Document> read_corpus(const std::string& path) {
  CsvTable table = read_csv(path);
  auto text_col = table.find_any({"text", "headline", "title"});
  auto id_col = table.column("id");
  if (!text_col) throw DataError(path + ": corpus needs a text column");
  std::vector<Document> docs;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    Document d;
    d.id = id_col ? trim(table.rows[r][*id_col]) : std::to_string(r + 1);
    d.text = table.rows[r][*text_col];
    if (d.id.empty()) throw DataError(path + ": row " + std::to_string(r + 2) + ": empty id");
    if (!seen.insert(d.id).second) {
      throw DataError(path + ": duplicate id '" + d.id + "'");
    }
    docs.push_back(std::move(d));
  }
  if (docs.empty()) throw DataError(path + ": corpus is empty");
  return docs;
}

// ---------------------------------------------------------------------------
// Annotations

std::vector<std::string> AnnotationSet::ids() const {
  std::vector<std::string> out;
  for (const auto& r : records) out.push_back(r.id);
  return out;
}

std::vector<Document> AnnotationSet::documents() const {
  std::vector<Document> out;
  for (const auto& r : records) out.push_back({r.id, r.text});
  return out;
}

std::vector<LabelColumn> AnnotationSet::label_columns() const {
  std::vector<LabelColumn> out;
  for (std::size_t d = 0; d < dimensions.size(); ++d) {
    out.push_back({dimensions[d], labels[d]});
  }
  return out;
}

AnnotationSet ingest_annotations(const std::string& path,
                                 const AnnotationConfig& config) {
  if (config.min_votes < 1) throw UsageError("min_votes must be >= 1");
  CsvTable table = read_csv(path);
  auto id_col = table.column(config.id_column);
  auto text_col = table.column(config.text_column);
  auto ann_col = table.column(config.annotators_column);
  if (!id_col || !text_col) {
    throw DataError(path + ": annotation file needs '" + config.id_column +
                    "' and '" + config.text_column + "' columns");
  }
  AnnotationSet out;
  std::vector<std::size_t> vote_idx;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == *id_col || c == *text_col || (ann_col && c == *ann_col)) continue;
    const auto& name = table.header[c];
    if (std::find(config.ignore_columns.begin(), config.ignore_columns.end(),
                  name) != config.ignore_columns.end()) {
      continue;
    }
    out.vote_columns.push_back(name);
    vote_idx.push_back(c);
  }
  if (out.vote_columns.empty()) {
    throw DataError(path + ": no vote-count columns");
  }

  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::string where = path + ": row " + std::to_string(r + 2);
    AnnotationRecord rec;
    rec.id = trim(row[*id_col]);
    rec.text = row[*text_col];
    if (rec.id.empty()) throw DataError(where + ": empty id");
    if (!seen.insert(rec.id).second) {
      throw DataError(where + ": duplicate id '" + rec.id + "'");
    }
    if (ann_col) {
      auto n = parse_count(row[*ann_col]);
      if (!n) throw DataError(where + ": malformed annotator count");
      if (*n < 3) {
        throw DataError(where + ": annotator count " + std::to_string(*n) +
                        " is below 3");
      }
      rec.annotator_count = *n;
    }
    for (std::size_t v = 0; v < vote_idx.size(); ++v) {
      auto n = parse_count(row[vote_idx[v]]);
      if (!n || *n < 0) {
        throw DataError(where + ": malformed vote count '" +
                        row[vote_idx[v]] + "' in column '" +
                        out.vote_columns[v] + "'");
      }
      if (rec.annotator_count && *n > *rec.annotator_count) {
        throw DataError(where + ": " + std::to_string(*n) + " votes for '" +
                        out.vote_columns[v] + "' exceed " +
                        std::to_string(*rec.annotator_count) + " annotators");
      }
      rec.votes.push_back(*n);
    }
    out.records.push_back(std::move(rec));
  }
  if (out.records.empty()) throw DataError(path + ": no annotation rows");

  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  if (config.aggregation.empty()) {
    for (std::size_t v = 0; v < out.vote_columns.size(); ++v) {
      groups.push_back({out.vote_columns[v], {v}});
    }
  } else {
    for (const auto& [dim, cols] : config.aggregation) {
      std::vector<std::size_t> members;
      for (const auto& c : cols) {
        auto it = std::find(out.vote_columns.begin(), out.vote_columns.end(), c);
        if (it == out.vote_columns.end()) {
          throw DataError(path + ": aggregation for '" + dim +
                          "' names unknown column '" + c + "'");
        }
        members.push_back(static_cast<std::size_t>(it - out.vote_columns.begin()));
      }
      if (members.empty()) {
        throw DataError("aggregation for '" + dim + "' lists no columns");
      }
      groups.push_back({dim, std::move(members)});
    }
  }
  for (const auto& [dim, members] : groups) {
    Labels labels;
    std::vector<double> counts;
    for (const auto& rec : out.records) {
      int label = 0;
      int total = 0;
      for (auto m : members) {
        total += rec.votes[m];
        if (rec.votes[m] >= config.min_votes) label = 1;
      }
      labels.push_back(label);
      counts.push_back(total);
    }
    out.dimensions.push_back(dim);
    out.labels.push_back(std::move(labels));
    out.counts.push_back(std::move(counts));
  }
  return out;
}

// ---------------------------------------------------------------------------
// External features

FeatureMatrix ingest_external_features(const std::string& path) {
  CsvTable table = read_csv(path);
  if (table.header.size() < 2) {
    throw DataError(path + ": feature file needs an id column and at least "
                           "one feature column");
  }
  FeatureMatrix matrix(
      std::vector<std::string>(table.header.begin() + 1, table.header.end()));
  std::set<std::string> seen;
  std::vector<double> values(matrix.cols());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::string id = trim(row[0]);
    if (!seen.insert(id).second) {
      throw DataError(path + ": duplicate id '" + id + "'");
    }
    for (std::size_t c = 1; c < row.size(); ++c) {
      auto v = parse_double_field(row[c]);
      if (!v) {
        throw DataError(path + ": row " + std::to_string(r + 2) +
                        ": non-numeric feature '" + row[c] + "'");
      }
      values[c - 1] = *v;
    }
    matrix.add_row(id, values);
  }
  return matrix;
}

AlignedFeatures align_features(const FeatureMatrix& features,
                               std::span<const std::string> corpus_ids) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    by_id.emplace(features.ids()[r], r);
  }
  AlignedFeatures out{FeatureMatrix(features.feature_names()), {}, {}};
  std::set<std::string> corpus(corpus_ids.begin(), corpus_ids.end());
  for (const auto& id : corpus_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      out.missing_ids.push_back(id);
    } else {
      out.matrix.add_row(id, features.row(it->second));
    }
  }
  for (const auto& id : features.ids()) {
    if (!corpus.count(id)) out.unmatched_ids.push_back(id);
  }
  if (out.matrix.rows() == 0) {
    throw DataError("external features share no id with the corpus");
  }
  return out;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix) {
  std::vector<std::string> header = {"id"};
  header.insert(header.end(), matrix.feature_names().begin(),
                matrix.feature_names().end());
  write_csv_row(out, header);
  std::vector<std::string> fields;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    fields.assign({matrix.ids()[r]});
    for (double v : matrix.row(r)) fields.push_back(format_double(v));
    write_csv_row(out, fields);
  }
}

// ---------------------------------------------------------------------------
// Frame resources

FrameResources make_frame_resources(EmbeddingStore store, MoralLexicon lexicon) {
  FrameResources r;
  r.store = std::move(store);
  r.lexicon = std::move(lexicon);
  r.coverage = coverage(r.lexicon, r.store);
  r.axes = build_axis_set(r.store, r.lexicon);
  r.load_report.lines_read = r.store.size();
  r.load_report.entries_kept = r.store.size();
  return r;
}

FrameResources load_frame_resources(const std::string& embeddings_path,
                                    const std::string& lexicon_path,
                                    bool unit_normalize) {
  if (embeddings_path.empty()) {
    throw UsageError("frame-axis features need --embeddings");
  }
  LoadOptions options;
  options.unit_normalize = unit_normalize;
  auto loaded = load_embeddings(embeddings_path, options);
  MoralLexicon lexicon =
      lexicon_path.empty() ? default_lexicon() : parse_lexicon(lexicon_path);
  FrameResources r = make_frame_resources(std::move(loaded.store), std::move(lexicon));
  r.load_report = loaded.report;
  return r;
}

FeatureMatrix frame_feature_matrix(std::span<const Document> documents,
                                   const AxisSet& axes,
                                   const EmbeddingStore& store,
                                   std::size_t* oov_only, unsigned threads) {
  auto scores = score_documents(documents, axes, store, threads);
  FeatureMatrix m(frame_feature_names(axes));
  std::size_t oov = 0;
  for (const auto& s : scores) {
    if (s.oov_only) ++oov;
    m.add_row(s.document_id, s.stacked());
  }
  if (oov_only) *oov_only = oov;
  return m;
}

// ---------------------------------------------------------------------------
// Config

ExperimentConfig apply_config_json(const nlohmann::json& doc,
                                   ExperimentConfig c) {
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  static const std::set<std::string> known = {
      "embeddings", "lexicon", "corpus", "annotations", "features",
      "headline_features", "leanings", "topics", "models", "axes", "out",
      "mode", "train_fraction", "splits", "seed", "classifier", "annotation",
      "unit_normalize", "topic_filter", "interval_level", "threads"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key) && !(key.size() > 0 && key[0] == '_')) {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
  auto str = [&](const char* key, std::string& field) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_string()) {
      throw UsageError(std::string("config: '") + key + "' must be a string");
    }
    field = doc[key].get<std::string>();
  };
  try {
    str("embeddings", c.embeddings_path);
    str("lexicon", c.lexicon_path);
    str("corpus", c.corpus_path);
    str("annotations", c.annotations_path);
    str("features", c.features_path);
    str("headline_features", c.headline_features_path);
    str("models", c.models_dir);
    str("axes", c.axes_path);
    str("out", c.output_dir);
    if (doc.contains("leanings")) {
      if (doc["leanings"].is_string()) {
        c.leanings_path = doc["leanings"].get<std::string>();
      } else {
        c.leanings_inline = doc["leanings"];
      }
    }
    if (doc.contains("topics")) {
      if (doc["topics"].is_string()) {
        c.topics_path = doc["topics"].get<std::string>();
      } else {
        c.topics_inline = doc["topics"];
      }
    }
    if (doc.contains("mode")) c.mode = parse_feature_mode(doc["mode"].get<std::string>());
    if (doc.contains("train_fraction")) c.split.train_fraction = doc["train_fraction"].get<double>();
    if (doc.contains("splits")) c.splits = doc["splits"].get<std::size_t>();
    if (doc.contains("seed")) c.split.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("classifier")) {
      c.classifier = train_config_from_json(doc["classifier"], c.classifier);
    }
    if (doc.contains("unit_normalize")) c.unit_normalize = doc["unit_normalize"].get<bool>();
    if (doc.contains("topic_filter")) c.topic_filter = doc["topic_filter"].get<bool>();
    if (doc.contains("interval_level")) c.interval_level = doc["interval_level"].get<double>();
    if (doc.contains("threads")) c.threads = doc["threads"].get<unsigned>();
    if (doc.contains("annotation")) {
      const auto& a = doc["annotation"];
      if (a.contains("min_votes")) c.annotation.min_votes = a["min_votes"].get<int>();
      if (a.contains("id_column")) c.annotation.id_column = a["id_column"].get<std::string>();
      if (a.contains("text_column")) c.annotation.text_column = a["text_column"].get<std::string>();
      if (a.contains("annotators_column"))
        c.annotation.annotators_column = a["annotators_column"].get<std::string>();
      if (a.contains("ignore_columns"))
        c.annotation.ignore_columns = a["ignore_columns"].get<std::vector<std::string>>();
      if (a.contains("aggregation")) {
        c.annotation.aggregation.clear();
        const auto& agg = a["aggregation"];
        if (agg.is_array()) {
          // [{"name": "care", "columns": ["care", "harm"]}, ...] keeps order.
          for (const auto& entry : agg) {
            c.annotation.aggregation.emplace_back(
                entry.at("name").get<std::string>(),
                entry.at("columns").get<std::vector<std::string>>());
          }
        } else {
          for (const auto& [dim, cols] : agg.items()) {
            c.annotation.aggregation.emplace_back(
                dim, cols.get<std::vector<std::string>>());
          }
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (c.splits == 0) throw UsageError("splits must be >= 1");
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json aggregation = nlohmann::json::array();
  for (const auto& [dim, cols] : c.annotation.aggregation) {
    aggregation.push_back({{"name", dim}, {"columns", cols}});
  }
  nlohmann::json doc = {
      {"embeddings", c.embeddings_path},
      {"lexicon", c.lexicon_path.empty() ? "<default>" : c.lexicon_path},
      {"corpus", c.corpus_path},
      {"annotations", c.annotations_path},
      {"features", c.features_path},
      {"headline_features", c.headline_features_path},
      {"models", c.models_dir},
      {"axes", c.axes_path},
      {"out", c.output_dir},
      {"mode", c.mode ? to_string(*c.mode) : "<default>"},
      {"train_fraction", c.split.train_fraction},
      {"splits", c.splits},
      {"seed", c.split.seed},
      {"classifier", to_json(c.classifier)},
      {"annotation",
       {{"min_votes", c.annotation.min_votes},
        {"id_column", c.annotation.id_column},
        {"text_column", c.annotation.text_column},
        {"annotators_column", c.annotation.annotators_column},
        {"ignore_columns", c.annotation.ignore_columns},
        {"aggregation", aggregation}}},
      {"unit_normalize", c.unit_normalize},
      {"topic_filter", c.topic_filter},
      {"interval_level", c.interval_level},
      {"threads", c.threads}};
  doc["leanings"] = c.leanings_inline ? *c.leanings_inline
                    : c.leanings_path.empty() ? nlohmann::json("<default>")
                                              : nlohmann::json(c.leanings_path);
  doc["topics"] = c.topics_inline ? *c.topics_inline
                  : c.topics_path.empty() ? nlohmann::json("<default>")
                                          : nlohmann::json(c.topics_path);
  return doc;
}

LeaningMap resolve_leanings(const ExperimentConfig& config) {
  if (config.leanings_inline) {
    return parse_leanings_json(config.leanings_inline->dump(), "config.leanings");
  }
  if (!config.leanings_path.empty()) return load_leanings(config.leanings_path);
  return parse_leanings_json(default_leanings_json(), "<default leanings>");
}

TopicKeywords resolve_topics(const ExperimentConfig& config) {
  if (config.topics_inline) {
    return parse_topics_json(config.topics_inline->dump(), "config.topics");
  }
  if (!config.topics_path.empty()) return load_topics(config.topics_path);
  return parse_topics_json(default_topics_json(), "<default topics>");
}

// ---------------------------------------------------------------------------
// Model sets and artifacts

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw DataError("cannot create directory " + dir + ": " + ec.message());
  }
}

void write_json_file(const nlohmann::json& doc, const std::string& path) {
  json_util::write_file(doc, path);
}

void save_artifacts(const std::string& dir, const MfModelSet& set) {
  ensure_directory(dir);
  ensure_directory(dir + "/models");
  nlohmann::json index = {{"schema_version", kModelSetSchemaVersion},
                          {"kind", "mf_model_set"},
                          {"mode", to_string(set.mode)},
                          {"feature_names", set.feature_names},
                          {"classifier", to_json(set.config)}};
  if (set.axes) {
    save_axis_set(*set.axes, dir + "/axes.json");
    index["axes"] = "axes.json";
  }
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : set.models) {
    std::string file = "models/" + safe_file_stem(m.name) + ".json";
    save_model(m.model, dir + "/" + file);
    models.push_back({{"dimension", m.name}, {"file", file}});
  }
  index["models"] = std::move(models);
  json_util::write_file(index, dir + "/model_set.json");
}

MfModelSet load_artifacts(const std::string& dir) {
  nlohmann::json index = json_util::read_file(dir + "/model_set.json");
  json_util::check_schema(index, "mf_model_set", kModelSetSchemaVersion);
  MfModelSet set;
  try {
    set.mode = parse_feature_mode(json_util::get_string(index, "mode", "model set"));
  } catch (const UsageError& e) {
    throw DataError(dir + "/model_set.json: " + e.what());
  }
  set.feature_names = json_util::get_strings(index, "feature_names", "model set");
  if (index.contains("classifier")) {
    set.config = train_config_from_json(index["classifier"]);
  }
  if (index.contains("axes")) {
    set.axes = load_axis_set(dir + "/" + json_util::get_string(index, "axes", "model set"));
    if (!set.axes->has_all_baselines()) {
      throw DataError(dir + ": stored axes lack baselines");
    }
  }
  if (set.mode != FeatureMode::kExternal && !set.axes) {
    throw DataError(dir + ": frame-axis model set has no axes.json");
  }
  for (const auto& entry : json_util::get_array(index, "models", "model set")) {
    std::string name = json_util::get_string(entry, "dimension", "model entry");
    std::string file = json_util::get_string(entry, "file", "model entry");
    LogisticModel model;
    try {
      model = load_model(dir + "/" + file);
    } catch (const SchemaVersionError&) {
      throw;
    } catch (const DataError& e) {
      throw DataError(dir + "/" + file + ": " + e.what());
    }
    if (model.feature_names != set.feature_names) {
      throw DataError(dir + "/" + file + ": feature names differ from model set");
    }
    set.models.push_back({name, std::move(model)});
  }
  if (set.models.empty()) throw DataError(dir + ": model set has no models");
  return set;
}

FeatureMatrix model_features(const MfModelSet& set,
                             std::span<const Document> documents,
                             const FrameResources* frame,
                             const FeatureMatrix* external, unsigned threads) {
  bool need_frame = set.mode != FeatureMode::kExternal;
  bool need_external = set.mode != FeatureMode::kFrameAxis;
  if (need_frame && (!frame || !set.axes)) {
    throw DataError("models trained on " + to_string(set.mode) +
                    " features need word embeddings");
  }
  if (need_external && !external) {
    throw DataError("models trained on " + to_string(set.mode) +
                    " features need external feature vectors for these texts");
  }

  std::vector<Document> docs(documents.begin(), documents.end());
  std::optional<FeatureMatrix> ext;
  if (need_external) {
    std::vector<std::string> ids;
    for (const auto& d : docs) ids.push_back(d.id);
    ext = align_features(*external, ids).matrix;
    std::set<std::string> have(ext->ids().begin(), ext->ids().end());
    std::erase_if(docs, [&](const Document& d) { return !have.count(d.id); });
  }
  FeatureMatrix out;
  if (set.mode == FeatureMode::kExternal) {
    out = std::move(*ext);
  } else {
    FeatureMatrix f =
        frame_feature_matrix(docs, *set.axes, frame->store, nullptr, threads);
    out = set.mode == FeatureMode::kCombined ? concat_columns(f, *ext) : std::move(f);
  }
  if (out.feature_names() != set.feature_names) {
    throw DataError("feature columns do not match the columns the models "
                    "were trained on");
  }
  return out;
}

FeatureMatrix likelihood_matrix(const MfModelSet& set,
                                const FeatureMatrix& features) {
  std::vector<std::string> names;
  for (const auto& m : set.models) names.push_back(m.name + "_likelihood");
  FeatureMatrix out(std::move(names));
  std::vector<double> row(set.models.size());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t m = 0; m < set.models.size(); ++m) {
      row[m] = predict_proba(set.models[m].model, features.row(r));
    }
    out.add_row(features.ids()[r], row);
  }
  return out;
}

namespace {

// Rows of `annotations` whose ids appear in `ids`, in `ids` order.
std::vector<std::size_t> rows_for_ids(const AnnotationSet& annotations,
                                      const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < annotations.records.size(); ++r) {
    index.emplace(annotations.records[r].id, r);
  }
  std::vector<std::size_t> rows;
  for (const auto& id : ids) rows.push_back(index.at(id));
  return rows;
}

struct ModeInputs {
  std::vector<std::size_t> rows;  // annotation rows used, in matrix order
  std::optional<FeatureMatrix> external;
};

ModeInputs prepare_mode(const AnnotationSet& annotations, FeatureMode mode,
                        const FrameResources* frame,
                        const FeatureMatrix* external) {
  ModeInputs in;
  if (mode != FeatureMode::kExternal && !frame) {
    throw UsageError(to_string(mode) + " features need --embeddings");
  }
  if (mode == FeatureMode::kFrameAxis) {
    for (std::size_t r = 0; r < annotations.records.size(); ++r) in.rows.push_back(r);
    return in;
  }
  if (!external) throw UsageError(to_string(mode) + " features need --features");
  auto aligned = align_features(*external, annotations.ids());
  in.rows = rows_for_ids(annotations, aligned.matrix.ids());
  in.external = std::move(aligned.matrix);
  return in;
}

}  // namespace

MfModelSet train_mf_models(const AnnotationSet& annotations, FeatureMode mode,
                           const FrameResources* frame,
                           const FeatureMatrix* external,
                           const TrainConfig& config, unsigned threads) {
  ModeInputs in = prepare_mode(annotations, mode, frame, external);
  auto all_docs = annotations.documents();
  std::vector<Document> docs;
  for (auto r : in.rows) docs.push_back(all_docs[r]);

  MfModelSet set;
  set.mode = mode;
  set.config = config;
  FeatureMatrix x;
  if (mode != FeatureMode::kExternal) {
    AxisSet axes = frame->axes;
    std::vector<TokenBag> bags;
    for (const auto& d : docs) bags.push_back(TokenBag::from_text(d.text));
    set_baselines(axes, bags, frame->store);
    x = frame_feature_matrix(docs, axes, frame->store, nullptr, threads);
    set.axes = std::move(axes);
  }
  if (mode == FeatureMode::kExternal) x = *in.external;
  if (mode == FeatureMode::kCombined) x = concat_columns(x, *in.external);
  set.feature_names = x.feature_names();

  std::vector<LabelColumn> columns;
  for (std::size_t d = 0; d < annotations.dimensions.size(); ++d) {
    columns.push_back({annotations.dimensions[d],
                       select_labels(annotations.labels[d], in.rows)});
  }
  set.models = train_multilabel(x, columns, config, threads);
  return set;
}

// ---------------------------------------------------------------------------
// Experiments

MfExperimentResult run_mf_experiment(const AnnotationSet& annotations,
                                     FeatureMode mode,
                                     const FrameResources* frame,
                                     const FeatureMatrix* external,
                                     const ExperimentConfig& config) {
  ModeInputs in = prepare_mode(annotations, mode, frame, external);
  auto all_docs = annotations.documents();
  std::vector<Document> docs;
  for (auto r : in.rows) docs.push_back(all_docs[r]);
  const std::size_t n = docs.size();
  const std::size_t dims = annotations.dimensions.size();

  std::vector<Labels> labels(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    labels[d] = select_labels(annotations.labels[d], in.rows);
  }

  MfExperimentResult result;
  result.mode = mode;
  result.rows = n;
  result.splits = config.splits;
  std::vector<std::vector<MetricsReport>> model_reports(dims);
  std::vector<std::vector<MetricsReport>> baseline_reports(dims);

  for (std::size_t s = 0; s < config.splits; ++s) {
    const std::uint64_t seed = config.split.seed + s;
    result.split_seeds.push_back(seed);
    auto [train, test] = split_indices(n, {config.split.train_fraction, seed});

    FeatureMatrix x;
    if (mode != FeatureMode::kExternal) {
      std::size_t oov = 0;
      x = split_frame_features(*frame, docs, train, &oov, config.threads);
      result.oov_only_documents = std::max(result.oov_only_documents, oov);
    }
    if (mode == FeatureMode::kExternal) x = *in.external;
    if (mode == FeatureMode::kCombined) x = concat_columns(x, *in.external);

    FeatureMatrix x_train = x.select_rows(train);
    FeatureMatrix x_test = x.select_rows(test);
    std::vector<LabelColumn> columns;
    for (std::size_t d = 0; d < dims; ++d) {
      columns.push_back({annotations.dimensions[d], select_labels(labels[d], train)});
    }
    std::vector<NamedModel> models;
    try {
      models = train_multilabel(x_train, columns, config.classifier, config.threads);
    } catch (const DataError& e) {
      throw DataError("split " + std::to_string(s) + " (seed " +
                      std::to_string(seed) + "): " + e.what());
    }
    for (std::size_t d = 0; d < dims; ++d) {
      Labels truth = select_labels(labels[d], test);
      model_reports[d].push_back(metrics(predict_labels(models[d].model, x_test), truth));
      BaselineModel base = baseline_train(columns[d].labels, derive_seed(seed, d));
      baseline_reports[d].push_back(metrics(baseline_predict(base, test.size()), truth));
    }
  }

  std::vector<MetricsReport> dim_models, dim_baselines;
  for (std::size_t d = 0; d < dims; ++d) {
    DimensionResult r{annotations.dimensions[d], mean_metrics(model_reports[d]),
                      mean_metrics(baseline_reports[d])};
    dim_models.push_back(r.model);
    dim_baselines.push_back(r.baseline);
    result.dimensions.push_back(std::move(r));
  }
  result.average = {"AVG", mean_metrics(dim_models), mean_metrics(dim_baselines)};
  return result;
}

void write_mf_table_csv(std::ostream& out, const MfExperimentResult& result) {
  std::vector<std::string> header = {"dimension", "precision", "recall",
                                     "f1", "accuracy", "baseline_f1",
                                     "baseline_accuracy"};
  write_csv_row(out, header);
  auto emit = [&](const DimensionResult& r) {
    std::vector<std::string> row = {r.dimension};
    for (auto& f : metric_fields(r.model)) row.push_back(f);
    row.push_back(format_double(r.baseline.f1));
    row.push_back(format_double(r.baseline.accuracy));
    write_csv_row(out, row);
  };
  emit(result.average);
  for (const auto& r : result.dimensions) emit(r);
}

PartisanResult run_partisanship_experiment(
    const HeadlineSet& headlines, const TopicKeywords& topics,
    const FrameResources& frame, const MfModelSet* mf_models,
    const FeatureMatrix* headline_features,
    std::span<const PartisanMode> modes, const ExperimentConfig& config) {
  PartisanResult result;
  result.ingest = headlines.report;
  const bool want_coefficients =
      std::find(modes.begin(), modes.end(), PartisanMode::kFrameAxis) != modes.end();

  for (const auto& [topic, keywords] : topics) {
    std::vector<Document> docs;
    Labels leaning;
    for (const auto& rec : headlines.records) {
      bool in_topic = config.topic_filter
                          ? std::find(rec.topics.begin(), rec.topics.end(),
                                      topic) != rec.topics.end()
                          : true;
      if (!in_topic) continue;
      docs.push_back({rec.id, rec.text});
      leaning.push_back(rec.leaning);
    }
    result.topic_rows[topic] = docs.size();
    if (docs.size() < 2) continue;

    std::optional<FeatureMatrix> likelihood;
    std::string likelihood_reason;
    if (!mf_models) {
      likelihood_reason = "no trained moral-foundation models supplied";
    } else {
      try {
        likelihood = likelihood_matrix(
            *mf_models, model_features(*mf_models, docs, &frame,
                                       headline_features, config.threads));
      } catch (const DataError& e) {
        likelihood_reason = e.what();
      }
    }

    std::unordered_map<std::string, std::size_t> doc_index;
    for (std::size_t i = 0; i < docs.size(); ++i) doc_index.emplace(docs[i].id, i);

    for (PartisanMode mode : modes) {
      PartisanModeResult r;
      r.topic = topic;
      r.mode = mode;
      if (mode != PartisanMode::kFrameAxis && !likelihood) {
        r.unavailable_reason = likelihood_reason;
        result.modes.push_back(std::move(r));
        continue;
      }
      // Rows used by this mode, as indices into docs.
      std::vector<std::size_t> subset;
      if (mode == PartisanMode::kFrameAxis) {
        for (std::size_t i = 0; i < docs.size(); ++i) subset.push_back(i);
      } else {
        for (const auto& id : likelihood->ids()) subset.push_back(doc_index.at(id));
      }
      std::vector<Document> sub_docs;
      for (auto i : subset) sub_docs.push_back(docs[i]);
      Labels y = select_labels(leaning, subset);
      r.rows = subset.size();

      std::vector<MetricsReport> model_reports, baseline_reports;
      for (std::size_t s = 0; s < config.splits; ++s) {
        const std::uint64_t seed = config.split.seed + s;
        auto [train, test] =
            split_indices(sub_docs.size(), {config.split.train_fraction, seed});
        FeatureMatrix x;
        if (mode == PartisanMode::kMfLikelihood) {
          x = *likelihood;
        } else {
          std::size_t oov = 0;
          FeatureMatrix f =
              split_frame_features(frame, sub_docs, train, &oov, config.threads);
          result.oov_only_documents = std::max(result.oov_only_documents, oov);
          x = mode == PartisanMode::kCombined ? concat_columns(*likelihood, f)
                                              : std::move(f);
        }
        Labels y_train = select_labels(y, train);
        Labels y_test = select_labels(y, test);
        LogisticModel model;
        try {
          model = train_logistic(x.select_rows(train), y_train, config.classifier);
        } catch (const DataError& e) {
          throw DataError("topic '" + topic + "', " + to_string(mode) +
                          ", split " + std::to_string(s) + ": " + e.what());
        }
        model_reports.push_back(
            metrics(predict_labels(model, x.select_rows(test)), y_test));
        BaselineModel base = baseline_train(y_train, derive_seed(seed, 0));
        baseline_reports.push_back(
            metrics(baseline_predict(base, test.size()), y_test));
      }
      r.available = true;
      r.model = mean_metrics(model_reports);
      r.baseline = mean_metrics(baseline_reports);
      result.modes.push_back(std::move(r));
    }

    if (want_coefficients) {
      std::vector<std::size_t> all(docs.size());
      for (std::size_t i = 0; i < docs.size(); ++i) all[i] = i;
      FeatureMatrix f = split_frame_features(frame, docs, all, nullptr, config.threads);
      LogisticModel model;
      try {
        model = train_logistic(f, leaning, config.classifier);
      } catch (const DataError& e) {
        throw DataError("topic '" + topic + "' coefficients: " + e.what());
      }
      auto intervals = coefficient_intervals(model, f, leaning, config.interval_level);
      for (std::size_t a = 0; a < frame.axes.axes.size(); ++a) {
        for (std::size_t k = 0; k < 2; ++k) {
          std::size_t j = 2 * a + k;
          result.coefficients.push_back({topic, f.feature_names()[j],
                                         frame.axes.axes[a].name,
                                         k == 0 ? "bias" : "intensity",
                                         intervals[j]});
        }
      }
    }
  }
  return result;
}

void write_partisan_table_csv(std::ostream& out, const PartisanResult& result) {
  std::vector<std::string> header = {"topic", "features", "rows", "precision",
                                     "recall", "f1", "accuracy",
                                     "baseline_f1", "baseline_accuracy"};
  write_csv_row(out, header);
  for (const auto& r : result.modes) {
    if (!r.available) continue;
    std::vector<std::string> row = {r.topic, to_string(r.mode),
                                    std::to_string(r.rows)};
    for (auto& f : metric_fields(r.model)) row.push_back(f);
    row.push_back(format_double(r.baseline.f1));
    row.push_back(format_double(r.baseline.accuracy));
    write_csv_row(out, row);
  }
}

void write_coefficients_csv(std::ostream& out,
                            std::span<const CoefficientRow> rows) {
  std::vector<std::string> header = {
      "topic", "feature", "dimension", "kind", "standardized_coefficient",
      "std_error", "ci_low", "ci_high", "significant"};
  write_csv_row(out, header);
  for (const auto& r : rows) {
    const auto& ci = r.interval;
    std::vector<std::string> row = {r.topic, r.feature, r.dimension, r.kind,
                                    format_double(ci.estimate)};
    if (ci.estimable) {
      row.push_back(format_double(ci.std_error));
      row.push_back(format_double(ci.low));
      row.push_back(format_double(ci.high));
      row.push_back(ci.significant ? "1" : "0");
    } else {
      row.insert(row.end(), {"NA", "NA", "NA", "NA"});
    }
    write_csv_row(out, row);
  }
}

CorrelationMatrix vote_count_correlations(const AnnotationSet& annotations) {
  std::vector<NamedColumn> columns;
  for (std::size_t d = 0; d < annotations.dimensions.size(); ++d) {
    columns.push_back({annotations.dimensions[d], annotations.counts[d]});
  }
  return correlation_matrix(columns);
}

CorrelationMatrix likelihood_correlations(const MfModelSet& set,
                                          const FeatureMatrix& features) {
  FeatureMatrix l = likelihood_matrix(set, features);
  std::vector<NamedColumn> columns;
  for (std::size_t m = 0; m < set.models.size(); ++m) {
    columns.push_back({set.models[m].name, l.column(m)});
  }
  return correlation_matrix(columns);
}

CorrelationRun run_correlation_report(const CorrelationInputs& in) {
  CorrelationRun run;
  if (in.annotations) {
    run.report.vote_counts = vote_count_correlations(*in.annotations);
  } else {
    run.notes.push_back("vote-count correlations skipped: no annotations");
  }
  if (!in.models) {
    run.notes.push_back("likelihood correlations skipped: no models");
    return run;
  }
  if (in.annotations) {
    try {
      auto docs = in.annotations->documents();
      run.report.annotation_likelihoods = likelihood_correlations(
          *in.models, model_features(*in.models, docs, in.frame,
                                     in.annotation_features, in.threads));
    } catch (const DataError& e) {
      run.notes.push_back(std::string("annotation likelihoods skipped: ") + e.what());
    }
  }
  if (!in.headlines.empty()) {
    try {
      run.report.headline_likelihoods = likelihood_correlations(
          *in.models, model_features(*in.models, in.headlines, in.frame,
                                     in.headline_features, in.threads));
    } catch (const DataError& e) {
      run.notes.push_back(std::string("headline likelihoods skipped: ") + e.what());
    }
  } else {
    run.notes.push_back("headline likelihoods skipped: no headlines");
  }
  return run;
}

nlohmann::json make_manifest(std::string_view command,
                             const ExperimentConfig& config,
                             nlohmann::json details) {
  nlohmann::json split_seeds = nlohmann::json::array();
  for (std::size_t s = 0; s < config.splits; ++s) {
    split_seeds.push_back(config.split.seed + s);
  }
  return {{"tool", "moralframe"},
          {"version", std::string(kVersion)},
          {"command", std::string(command)},
          {"config", to_json(config)},
          {"seeds", {{"base", config.split.seed}, {"splits", std::move(split_seeds)}}},
          {"details", std::move(details)}};
}

}  // namespace moralframe
