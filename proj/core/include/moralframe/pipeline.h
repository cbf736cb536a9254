#ifndef MORALFRAME_PIPELINE_H_
#define MORALFRAME_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "moralframe/axes.h"
#include "moralframe/classifier.h"
#include "moralframe/embedding_store.h"
#include "moralframe/eval.h"
#include "moralframe/lexicon.h"
#include "moralframe/scorer.h"

namespace moralframe {

inline constexpr std::string_view kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Feature modes

enum class FeatureMode { kFrameAxis, kExternal, kCombined };

std::string to_string(FeatureMode mode);
// Accepts "frame_axis", "external", "combined"; throws UsageError otherwise.
FeatureMode parse_feature_mode(std::string_view text);

// Feature sets compared in the partisanship experiment.
enum class PartisanMode { kMfLikelihood, kFrameAxis, kCombined };
std::string to_string(PartisanMode mode);

// ---------------------------------------------------------------------------
// Headlines

// Liberal = 1, conservative = 0. Sources mapped to "center" are kept in the
// map only to document that they are dropped on purpose.
struct LeaningMap {
  std::map<std::string, std::optional<int>> sources;  // key: lowercased name

  // nullopt for unknown and center sources.
  std::optional<int> leaning(std::string_view source) const;
};

// {"leanings": {"Source": "liberal" | "conservative" | "center" | 1 | 0}}
// or the bare inner object.
LeaningMap parse_leanings_json(std::string_view text,
                               std::string_view origin = "<memory>");
LeaningMap load_leanings(const std::string& path);
std::string_view default_leanings_json();

// Topic name -> keywords, in declared order. Multi-word keywords match as a
// contiguous token sequence.
using TopicKeywords = std::vector<std::pair<std::string, std::vector<std::string>>>;

// {"topics": {"immigration": ["..."], ...}} or the bare inner object.
TopicKeywords parse_topics_json(std::string_view text,
                                std::string_view origin = "<memory>");
TopicKeywords load_topics(const std::string& path);
std::string_view default_topics_json();

// Topics whose keywords occur as whole tokens in the text, in topic order.
std::vector<std::string> match_topics(std::string_view text,
                                      const TopicKeywords& topics);

struct HeadlineRecord {
  std::string id;
  std::string text;
  std::string source;
  int leaning = 0;
  std::vector<std::string> topics;
};

struct HeadlineIngestReport {
  std::size_t rows_read = 0;
  std::size_t kept = 0;
  std::size_t dropped_empty_text = 0;
  std::size_t dropped_unmapped_source = 0;
  std::size_t dropped_no_topic = 0;

  std::size_t dropped() const {
    return dropped_empty_text + dropped_unmapped_source + dropped_no_topic;
  }
};

struct HeadlineSet {
  std::vector<HeadlineRecord> records;
  HeadlineIngestReport report;
};

// Reads a headline CSV. Text comes from the first of "headline", "title",
// "text"; the source from "publication" or "source"; ids from "id" (else
// the 1-based row number). Rows with an unmapped or center source are
// dropped; with topic filtering, rows matching no topic are dropped too.
// Throws DataError on missing columns, duplicate ids or an empty result.
HeadlineSet ingest_headlines(const std::string& path, const LeaningMap& leanings,
                             const TopicKeywords& topics,
                             bool filter_topics = true);

// Plain corpus CSV: text from "text", "headline" or "title"; ids from "id"
// (else the 1-based row number). Throws DataError on a missing text column
// or duplicate ids.
std::vector<Document> read_corpus(const std::string& path);

// ---------------------------------------------------------------------------
// Annotations

struct AnnotationConfig {
  int min_votes = 2;
  std::string id_column = "id";
  std::string text_column = "text";
  std::string annotators_column = "annotators";
  // Columns that are neither metadata nor vote counts.
  std::vector<std::string> ignore_columns;
  // Optional label dimension -> source vote columns. A dimension is 1 when
  // any source column reaches min_votes; its count is the sum of votes.
  // Empty means one dimension per vote column.
  std::vector<std::pair<std::string, std::vector<std::string>>> aggregation;
};

struct AnnotationRecord {
  std::string id;
  std::string text;
  std::vector<int> votes;  // aligned with AnnotationSet::vote_columns
  std::optional<int> annotator_count;
};

struct AnnotationSet {
  std::vector<std::string> vote_columns;
  std::vector<AnnotationRecord> records;
  std::vector<std::string> dimensions;
  // labels[d][row] and counts[d][row] per label dimension.
  std::vector<Labels> labels;
  std::vector<std::vector<double>> counts;

  std::vector<std::string> ids() const;
  std::vector<Document> documents() const;
  std::vector<LabelColumn> label_columns() const;
};

// Reads a CSV/TSV of per-dimension vote counts. Throws DataError for
// missing columns, non-integer or negative counts, counts above the
// annotator count, fewer than 3 annotators, or duplicate ids.
AnnotationSet ingest_annotations(const std::string& path,
                                 const AnnotationConfig& config = {});

// ---------------------------------------------------------------------------
// External feature vectors

// CSV: header "id,<name>...", then one numeric row per document. Throws
// DataError on ragged rows, unparsable numbers or duplicate ids.
FeatureMatrix ingest_external_features(const std::string& path);

struct AlignedFeatures {
  FeatureMatrix matrix;                  // rows in corpus order
  std::vector<std::string> unmatched_ids;  // in the file, not in the corpus
  std::vector<std::string> missing_ids;    // in the corpus, not in the file
};

// Throws DataError when no id overlaps.
AlignedFeatures align_features(const FeatureMatrix& features,
                               std::span<const std::string> corpus_ids);

// Writes the ingest layout with 17 significant digits.
void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix);

// ---------------------------------------------------------------------------
// Frame-axis resources

struct FrameResources {
  EmbeddingStore store;
  LoadReport load_report;
  MoralLexicon lexicon;
  LexiconCoverage coverage;
  AxisSet axes;  // no baselines
};

FrameResources load_frame_resources(const std::string& embeddings_path,
                                    const std::string& lexicon_path,
                                    bool unit_normalize = false);
FrameResources make_frame_resources(EmbeddingStore store, MoralLexicon lexicon);

// Frame features of `documents` with the axis baselines already set.
FeatureMatrix frame_feature_matrix(std::span<const Document> documents,
                                   const AxisSet& axes,
                                   const EmbeddingStore& store,
                                   std::size_t* oov_only = nullptr,
                                   unsigned threads = 1);

// ---------------------------------------------------------------------------
// Experiment configuration

struct ExperimentConfig {
  std::string embeddings_path;
  std::string lexicon_path;  // empty: bundled default lexicon
  std::string corpus_path;
  std::string annotations_path;
  std::string features_path;
  std::string headline_features_path;
  std::string leanings_path;  // empty: bundled default map
  std::string topics_path;    // empty: bundled default keywords
  std::string models_dir;
  std::string axes_path;
  std::string output_dir;

  std::optional<FeatureMode> mode;  // unset: command default
  SplitSpec split;
  std::size_t splits = 10;
  TrainConfig classifier;
  AnnotationConfig annotation;
  bool unit_normalize = false;
  bool topic_filter = true;
  double interval_level = 0.95;
  unsigned threads = 1;

  // Inline overrides of the leaning/topic files.
  std::optional<nlohmann::json> leanings_inline;
  std::optional<nlohmann::json> topics_inline;

  FeatureMode mode_or(FeatureMode fallback) const {
    return mode.value_or(fallback);
  }
};

// Applies the keys present in `doc` on top of `base`. Unknown keys are a
// UsageError.
ExperimentConfig apply_config_json(const nlohmann::json& doc,
                                   ExperimentConfig base);
nlohmann::json to_json(const ExperimentConfig& config);

LeaningMap resolve_leanings(const ExperimentConfig& config);
TopicKeywords resolve_topics(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Trained moral-foundation model sets

struct MfModelSet {
  FeatureMode mode = FeatureMode::kFrameAxis;
  // Axes with the training-corpus baselines (frame_axis and combined).
  std::optional<AxisSet> axes;
  std::vector<std::string> feature_names;
  std::vector<NamedModel> models;
  TrainConfig config;
};

inline constexpr int kModelSetSchemaVersion = 1;

// Writes model_set.json, axes.json (when present) and one
// models/<dimension>.json per model. Throws DataError if the directory
// cannot be created or written.
void save_artifacts(const std::string& dir, const MfModelSet& set);
// Throws DataError on malformed or tampered files and SchemaVersionError on
// version mismatch.
MfModelSet load_artifacts(const std::string& dir);

// Feature matrix for a model set's mode. `frame` is required for
// frame_axis/combined, `external` for external/combined; rows follow
// `documents`, restricted to documents present in `external`.
FeatureMatrix model_features(const MfModelSet& set,
                             std::span<const Document> documents,
                             const FrameResources* frame,
                             const FeatureMatrix* external,
                             unsigned threads = 1);

// One "<dimension>_likelihood" column per model.
FeatureMatrix likelihood_matrix(const MfModelSet& set,
                                const FeatureMatrix& features);

// Trains one model per label dimension on the whole annotation set.
MfModelSet train_mf_models(const AnnotationSet& annotations, FeatureMode mode,
                           const FrameResources* frame,
                           const FeatureMatrix* external,
                           const TrainConfig& config, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Experiments

struct DimensionResult {
  std::string dimension;
  MetricsReport model;
  MetricsReport baseline;
};

struct MfExperimentResult {
  FeatureMode mode = FeatureMode::kFrameAxis;
  std::vector<DimensionResult> dimensions;
  DimensionResult average;  // dimension == "AVG"
  std::size_t rows = 0;
  std::size_t oov_only_documents = 0;
  std::size_t splits = 0;
  std::vector<std::uint64_t> split_seeds;
};

// Repeated seeded splits; per dimension the mean test metrics of the
// logistic model and of the frequency baseline.
MfExperimentResult run_mf_experiment(const AnnotationSet& annotations,
                                     FeatureMode mode,
                                     const FrameResources* frame,
                                     const FeatureMatrix* external,
                                     const ExperimentConfig& config);

// Columns: dimension,precision,recall,f1,accuracy,baseline_f1,
// baseline_accuracy. The AVG row comes first.
void write_mf_table_csv(std::ostream& out, const MfExperimentResult& result);

struct CoefficientRow {
  std::string topic;
  std::string feature;
  std::string dimension;
  std::string kind;  // "bias" or "intensity"
  CoefficientInterval interval;
};

struct PartisanModeResult {
  std::string topic;
  PartisanMode mode = PartisanMode::kFrameAxis;
  bool available = false;
  std::string unavailable_reason;
  std::size_t rows = 0;
  MetricsReport model;
  MetricsReport baseline;
};

struct PartisanResult {
  std::vector<PartisanModeResult> modes;
  std::vector<CoefficientRow> coefficients;
  HeadlineIngestReport ingest;
  std::map<std::string, std::size_t> topic_rows;
  std::size_t oov_only_documents = 0;
};

// `mf_models` and `headline_features` are optional; without them the
// likelihood and combined modes are reported as unavailable.
PartisanResult run_partisanship_experiment(
    const HeadlineSet& headlines, const TopicKeywords& topics,
    const FrameResources& frame, const MfModelSet* mf_models,
    const FeatureMatrix* headline_features,
    std::span<const PartisanMode> modes, const ExperimentConfig& config);

// Columns: topic,features,rows,precision,recall,f1,accuracy,baseline_f1,
// baseline_accuracy. Unavailable modes are omitted.
void write_partisan_table_csv(std::ostream& out, const PartisanResult& result);
// Coefficients are on standardized features.
void write_coefficients_csv(std::ostream& out,
                            std::span<const CoefficientRow> rows);

struct CorrelationReport {
  std::optional<CorrelationMatrix> vote_counts;
  std::optional<CorrelationMatrix> annotation_likelihoods;
  std::optional<CorrelationMatrix> headline_likelihoods;
};

CorrelationMatrix likelihood_correlations(const MfModelSet& set,
                                          const FeatureMatrix& features);
CorrelationMatrix vote_count_correlations(const AnnotationSet& annotations);

// (a) correlations of raw vote counts, (b) of predicted likelihoods on the
// annotation texts, (c) of predicted likelihoods on headlines. Each part is
// produced when its inputs are present; a part whose model features cannot
// be built is left empty and its reason recorded.
struct CorrelationInputs {
  const AnnotationSet* annotations = nullptr;
  const MfModelSet* models = nullptr;
  std::span<const Document> headlines;
  const FrameResources* frame = nullptr;
  const FeatureMatrix* annotation_features = nullptr;
  const FeatureMatrix* headline_features = nullptr;
  unsigned threads = 1;
};

struct CorrelationRun {
  CorrelationReport report;
  std::vector<std::string> notes;
};

CorrelationRun run_correlation_report(const CorrelationInputs& inputs);

// ---------------------------------------------------------------------------
// Run manifest

nlohmann::json make_manifest(std::string_view command,
                             const ExperimentConfig& config,
                             nlohmann::json details);
void write_json_file(const nlohmann::json& doc, const std::string& path);
// Creates the directory (and parents); throws DataError on failure.
void ensure_directory(const std::string& dir);

}  // namespace moralframe

#endif  // MORALFRAME_PIPELINE_H_
