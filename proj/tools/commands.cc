#include "commands.h"

#include <array>
#include <fstream>
#include <optional>
#include <vector>

#include "moralframe/csv.h"
#include "moralframe/error.h"

namespace moralframe::cli {
namespace {

std::string out_path(const ExperimentConfig& c, const std::string& name) {
  return c.output_dir + "/" + name;
}

std::ofstream open_report(const ExperimentConfig& c, const std::string& name) {
  std::ofstream out(out_path(c, name), std::ios::binary);
  if (!out) throw DataError("cannot write " + out_path(c, name));
  return out;
}

void require(const std::string& value, const char* flag, const char* command) {
  if (value.empty()) {
    throw UsageError(std::string(command) + " needs " + flag);
  }
}

void write_manifest(const ExperimentConfig& c, std::string_view command,
                    nlohmann::json details) {
  write_json_file(make_manifest(command, c, std::move(details)),
                  out_path(c, "manifest.json"));
}

void write_coverage_csv(std::ostream& out, const LexiconCoverage& cov) {
  const std::array<std::string, 4> header = {"dimension", "pole", "word", "found"};
  write_csv_row(out, header);
  for (const auto& d : cov.dimensions) {
    auto emit = [&](const PoleCoverage& p, const char* pole) {
      std::vector<std::pair<std::string, bool>> words;
      for (const auto& w : p.found) words.emplace_back(w, true);
      for (const auto& w : p.missing) words.emplace_back(w, false);
      std::sort(words.begin(), words.end());
      for (const auto& [w, found] : words) {
        const std::array<std::string, 4> row = {d.name, pole, w, found ? "1" : "0"};
        write_csv_row(out, row);
      }
    };
    emit(d.virtues, "virtue");
    emit(d.vices, "vice");
  }
}

std::optional<FrameResources> maybe_frame(const ExperimentConfig& c) {
  if (c.embeddings_path.empty()) return std::nullopt;
  return load_frame_resources(c.embeddings_path, c.lexicon_path, c.unit_normalize);
}

std::optional<FeatureMatrix> maybe_features(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return ingest_external_features(path);
}

template <typename T>
const T* ptr(const std::optional<T>& o) {
  return o ? &*o : nullptr;
}

nlohmann::json frame_details(const FrameResources& f) {
  return {{"embeddings", to_json(f.load_report)},
          {"dimension", f.store.dimension()},
          {"lexicon", f.lexicon.name},
          {"missing_lexicon_words", f.coverage.missing_words().size()}};
}

HeadlineSet headlines_for(const ExperimentConfig& c) {
  return ingest_headlines(c.corpus_path, resolve_leanings(c), resolve_topics(c),
                          c.topic_filter);
}

nlohmann::json ingest_details(const HeadlineIngestReport& r) {
  return {{"rows_read", r.rows_read},
          {"kept", r.kept},
          {"dropped_empty_text", r.dropped_empty_text},
          {"dropped_unmapped_source", r.dropped_unmapped_source},
          {"dropped_no_topic", r.dropped_no_topic}};
}

void write_matrix(const ExperimentConfig& c, const std::string& name,
                  const CorrelationMatrix& m) {
  auto out = open_report(c, name);
  write_correlation_csv(out, m);
}

}  // namespace

void build_axes(const ExperimentConfig& c, std::ostream& log) {
  require(c.embeddings_path, "--embeddings", "build-axes");
  FrameResources frame =
      load_frame_resources(c.embeddings_path, c.lexicon_path, c.unit_normalize);
  ensure_directory(c.output_dir);
  AxisSet axes = frame.axes;
  nlohmann::json details = frame_details(frame);
  if (!c.corpus_path.empty()) {
    auto docs = read_corpus(c.corpus_path);
    std::vector<TokenBag> bags;
    for (const auto& d : docs) bags.push_back(TokenBag::from_text(d.text));
    set_baselines(axes, bags, frame.store);
    details["corpus_rows"] = docs.size();
  }
  save_axis_set(axes, out_path(c, "axes.json"));
  {
    auto out = open_report(c, "coverage.csv");
    write_coverage_csv(out, frame.coverage);
  }
  write_manifest(c, "build-axes", std::move(details));
  log << "built " << axes.axes.size() << " axes over "
      << frame.store.size() << " vectors -> " << out_path(c, "axes.json") << "\n";
  if (!frame.coverage.missing_words().empty()) {
    log << frame.coverage.missing_words().size()
        << " lexicon words have no vector (see coverage.csv)\n";
  }
}

void score(const ExperimentConfig& c, std::ostream& log) {
  require(c.embeddings_path, "--embeddings", "score");
  require(c.corpus_path, "--corpus", "score");
  LoadOptions options;
  options.unit_normalize = c.unit_normalize;
  auto loaded = load_embeddings(c.embeddings_path, options);
  auto docs = read_corpus(c.corpus_path);
  ensure_directory(c.output_dir);
  AxisSet axes;
  bool stored_baselines = false;
  if (!c.axes_path.empty()) {
    axes = load_axis_set(c.axes_path);
    if (axes.embedding_dimension != loaded.store.dimension()) {
      throw DataError(c.axes_path + ": axis dimension does not match embeddings");
    }
    stored_baselines = axes.has_all_baselines();
  } else {
    MoralLexicon lexicon =
        c.lexicon_path.empty() ? default_lexicon() : parse_lexicon(c.lexicon_path);
    axes = build_axis_set(loaded.store, lexicon);
  }
  if (!stored_baselines) {
    std::vector<TokenBag> bags;
    for (const auto& d : docs) bags.push_back(TokenBag::from_text(d.text));
    set_baselines(axes, bags, loaded.store);
  }
  auto scores = score_documents(docs, axes, loaded.store, c.threads);
  std::size_t oov = 0;
  for (const auto& s : scores) oov += s.oov_only ? 1 : 0;
  {
    auto out = open_report(c, "scores.csv");
    write_scores_csv(out, axes, scores);
  }
  nlohmann::json baselines = nlohmann::json::object();
  for (const auto& a : axes.axes) baselines[a.name] = *axes.baseline(a.name);
  write_manifest(c, "score",
                 {{"embeddings", to_json(loaded.report)},
                  {"rows", docs.size()},
                  {"oov_only_documents", oov},
                  {"baselines_from", stored_baselines ? "axes file" : "corpus"},
                  {"baselines", baselines}});
  log << "scored " << docs.size() << " documents (" << oov
      << " with no in-vocabulary token) -> " << out_path(c, "scores.csv") << "\n";
}

void train_mf(const ExperimentConfig& c, std::ostream& log) {
  require(c.annotations_path, "--annotations", "train-mf");
  FeatureMode mode = c.mode_or(FeatureMode::kFrameAxis);
  auto annotations = ingest_annotations(c.annotations_path, c.annotation);
  auto frame = mode == FeatureMode::kExternal ? std::nullopt : maybe_frame(c);
  auto external = mode == FeatureMode::kFrameAxis ? std::nullopt
                                                  : maybe_features(c.features_path);
  MfModelSet set = train_mf_models(annotations, mode, ptr(frame), ptr(external),
                                   c.classifier, c.threads);
  std::string dir = c.models_dir.empty() ? out_path(c, "models") : c.models_dir;
  save_artifacts(dir, set);
  {
    auto out = open_report(c, "training.csv");
    const std::array<std::string, 7> header = {
        "dimension", "rows", "positives", "iterations", "converged",
        "final_loss", "final_gradient_norm"};
    write_csv_row(out, header);
    for (std::size_t d = 0; d < set.models.size(); ++d) {
      const auto& info = set.models[d].model.info;
      std::size_t positives = 0;
      for (int y : annotations.labels[d]) positives += y;
      const std::array<std::string, 7> row = {
          set.models[d].name, std::to_string(info.rows),
          std::to_string(positives), std::to_string(info.iterations),
          info.converged ? "1" : "0", format_double(info.final_loss),
          format_double(info.final_gradient_norm)};
      write_csv_row(out, row);
    }
  }
  nlohmann::json details = {{"mode", to_string(mode)},
                            {"rows", annotations.records.size()},
                            {"dimensions", annotations.dimensions},
                            {"models_dir", dir}};
  if (frame) details["frame"] = frame_details(*frame);
  write_manifest(c, "train-mf", std::move(details));
  log << "trained " << set.models.size() << " " << to_string(mode)
      << " models -> " << dir << "\n";
}

void eval_mf(const ExperimentConfig& c, std::ostream& log) {
  require(c.annotations_path, "--annotations", "eval-mf");
  FeatureMode mode = c.mode_or(FeatureMode::kFrameAxis);
  auto annotations = ingest_annotations(c.annotations_path, c.annotation);
  auto frame = mode == FeatureMode::kExternal ? std::nullopt : maybe_frame(c);
  auto external = mode == FeatureMode::kFrameAxis ? std::nullopt
                                                  : maybe_features(c.features_path);
  auto result = run_mf_experiment(annotations, mode, ptr(frame), ptr(external), c);
  ensure_directory(c.output_dir);
  {
    auto out = open_report(c, "mf_table.csv");
    write_mf_table_csv(out, result);
  }
  nlohmann::json details = {{"mode", to_string(mode)},
                            {"rows", result.rows},
                            {"annotation_rows", annotations.records.size()},
                            {"oov_only_documents", result.oov_only_documents},
                            {"split_seeds", result.split_seeds}};
  if (frame) details["frame"] = frame_details(*frame);
  write_manifest(c, "eval-mf", std::move(details));
  log << to_string(mode) << ": mean accuracy " << result.average.model.accuracy
      << " (baseline " << result.average.baseline.accuracy << ") over "
      << result.splits << " splits -> " << out_path(c, "mf_table.csv") << "\n";
}

void partisan(const ExperimentConfig& c, std::ostream& log) {
  require(c.corpus_path, "--corpus", "partisan");
  require(c.embeddings_path, "--embeddings", "partisan");
  TopicKeywords topics = resolve_topics(c);
  HeadlineSet headlines = ingest_headlines(c.corpus_path, resolve_leanings(c),
                                           topics, c.topic_filter);
  FrameResources frame =
      load_frame_resources(c.embeddings_path, c.lexicon_path, c.unit_normalize);
  std::optional<MfModelSet> models;
  if (!c.models_dir.empty()) models = load_artifacts(c.models_dir);
  auto features = maybe_features(c.headline_features_path);

  std::vector<PartisanMode> modes;
  if (!c.mode) {
    modes = {PartisanMode::kMfLikelihood, PartisanMode::kFrameAxis,
             PartisanMode::kCombined};
  } else if (*c.mode == FeatureMode::kFrameAxis) {
    modes = {PartisanMode::kFrameAxis};
  } else if (*c.mode == FeatureMode::kExternal) {
    modes = {PartisanMode::kMfLikelihood};
  } else {
    modes = {PartisanMode::kCombined};
  }
  ExperimentConfig topic_config = c;
  if (!c.topic_filter) {
    // Without topic filtering every kept headline forms one pool.
    topic_config.topic_filter = false;
    topics = {{"all", {"*"}}};
  }
  auto result = run_partisanship_experiment(headlines, topics, frame, ptr(models),
                                            ptr(features), modes, topic_config);
  ensure_directory(c.output_dir);
  {
    auto out = open_report(c, "partisan_table.csv");
    write_partisan_table_csv(out, result);
  }
  if (!result.coefficients.empty()) {
    auto out = open_report(c, "coefficients.csv");
    write_coefficients_csv(out, result.coefficients);
  }
  nlohmann::json unavailable = nlohmann::json::array();
  for (const auto& r : result.modes) {
    if (r.available) continue;
    unavailable.push_back({{"topic", r.topic},
                           {"features", to_string(r.mode)},
                           {"reason", r.unavailable_reason}});
    log << r.topic << " / " << to_string(r.mode)
        << " unavailable: " << r.unavailable_reason << "\n";
  }
  nlohmann::json details = {{"headlines", ingest_details(result.ingest)},
                            {"topic_rows", result.topic_rows},
                            {"oov_only_documents", result.oov_only_documents},
                            {"unavailable", unavailable},
                            {"frame", frame_details(frame)},
                            {"coefficient_scale", "standardized features"}};
  write_manifest(c, "partisan", std::move(details));
  for (const auto& r : result.modes) {
    if (!r.available) continue;
    log << r.topic << " / " << to_string(r.mode) << ": f1 " << r.model.f1
        << " accuracy " << r.model.accuracy << " (baseline f1 "
        << r.baseline.f1 << ", " << r.rows << " rows)\n";
  }
}

void correlate(const ExperimentConfig& c, std::ostream& log) {
  if (c.annotations_path.empty() && c.corpus_path.empty()) {
    throw UsageError("correlate needs --annotations and/or --corpus");
  }
  std::optional<AnnotationSet> annotations;
  if (!c.annotations_path.empty()) {
    annotations = ingest_annotations(c.annotations_path, c.annotation);
  }
  std::optional<MfModelSet> models;
  if (!c.models_dir.empty()) models = load_artifacts(c.models_dir);
  auto frame = maybe_frame(c);
  auto features = maybe_features(c.features_path);
  auto headline_features = maybe_features(c.headline_features_path);
  std::vector<Document> headline_docs;
  std::optional<HeadlineSet> headlines;
  if (!c.corpus_path.empty()) {
    headlines = headlines_for(c);
    for (const auto& h : headlines->records) headline_docs.push_back({h.id, h.text});
  }

  CorrelationInputs in;
  in.annotations = ptr(annotations);
  in.models = ptr(models);
  in.headlines = headline_docs;
  in.frame = ptr(frame);
  in.annotation_features = ptr(features);
  in.headline_features = ptr(headline_features);
  in.threads = c.threads;
  CorrelationRun run = run_correlation_report(in);

  ensure_directory(c.output_dir);
  nlohmann::json written = nlohmann::json::array();
  if (run.report.vote_counts) {
    write_matrix(c, "corr_vote_counts.csv", *run.report.vote_counts);
    written.push_back("corr_vote_counts.csv");
  }
  if (run.report.annotation_likelihoods) {
    write_matrix(c, "corr_annotation_likelihoods.csv",
                 *run.report.annotation_likelihoods);
    written.push_back("corr_annotation_likelihoods.csv");
  }
  if (run.report.headline_likelihoods) {
    write_matrix(c, "corr_headline_likelihoods.csv",
                 *run.report.headline_likelihoods);
    written.push_back("corr_headline_likelihoods.csv");
  }
  nlohmann::json details = {{"reports", written}, {"notes", run.notes}};
  if (annotations) details["annotation_rows"] = annotations->records.size();
  if (headlines) details["headlines"] = ingest_details(headlines->report);
  write_manifest(c, "correlate", std::move(details));
  for (const auto& note : run.notes) log << note << "\n";
  log << "wrote " << written.size() << " correlation matrices to "
      << c.output_dir << "\n";
}

}  // namespace moralframe::cli
