#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "commands.h"
#include "moralframe/error.h"

namespace {

using moralframe::ExperimentConfig;

struct Flags {
  std::string embeddings, lexicon, corpus, annotations, features;
  std::string headline_features, leanings, topics, models, axes, out, config;
  std::optional<std::string> mode;
  std::optional<double> train_fraction;
  std::optional<std::size_t> splits;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool unit_normalize = false;
  bool no_topic_filter = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--embeddings", f.embeddings, "Word-vector text file");
  cmd->add_option("--lexicon", f.lexicon, "Lexicon JSON (default: bundled)");
  cmd->add_option("--corpus", f.corpus, "Corpus or headline CSV");
  cmd->add_option("--annotations", f.annotations, "Annotation vote-count CSV/TSV");
  cmd->add_option("--features", f.features, "External feature CSV for annotations");
  cmd->add_option("--headline-features", f.headline_features,
                  "External feature CSV for headlines");
  cmd->add_option("--leanings", f.leanings, "Source leaning JSON (default: bundled)");
  cmd->add_option("--topics", f.topics, "Topic keyword JSON (default: bundled)");
  cmd->add_option("--models", f.models, "Directory of trained models");
  cmd->add_option("--axes", f.axes, "Axis-set JSON with baselines");
  cmd->add_option("--mode", f.mode, "Feature mode")
      ->check(CLI::IsMember({"frame_axis", "external", "combined"}));
  cmd->add_option("--train-fraction", f.train_fraction, "Training share (default 0.75)");
  cmd->add_option("--splits", f.splits, "Repeated splits (default 10)");
  cmd->add_option("--seed", f.seed, "Base seed (default 0)");
  cmd->add_option("--threads", f.threads, "Worker threads, 0 = all cores (default 1)");
  cmd->add_flag("--unit-normalize", f.unit_normalize, "Scale word vectors to unit length");
  cmd->add_flag("--no-topic-filter", f.no_topic_filter,
                "Keep headlines matching no topic");
  cmd->add_option("--out", f.out, "Output directory")->required();
  cmd->add_option("--config", f.config, "JSON config; its keys override flags");
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c;
  c.embeddings_path = f.embeddings;
  c.lexicon_path = f.lexicon;
  c.corpus_path = f.corpus;
  c.annotations_path = f.annotations;
  c.features_path = f.features;
  c.headline_features_path = f.headline_features;
  c.leanings_path = f.leanings;
  c.topics_path = f.topics;
  c.models_dir = f.models;
  c.axes_path = f.axes;
  c.output_dir = f.out;
  if (f.mode) c.mode = moralframe::parse_feature_mode(*f.mode);
  if (f.train_fraction) c.split.train_fraction = *f.train_fraction;
  if (f.splits) c.splits = *f.splits;
  if (f.seed) c.split.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  c.unit_normalize = f.unit_normalize;
  c.topic_filter = !f.no_topic_filter;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw moralframe::UsageError("cannot open config " + f.config);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw moralframe::UsageError(f.config + ": invalid JSON: " + e.what());
    }
    c = moralframe::apply_config_json(doc, std::move(c));
  }
  if (c.splits == 0) throw moralframe::UsageError("--splits must be >= 1");
  if (!(c.split.train_fraction > 0.0 && c.split.train_fraction < 1.0)) {
    throw moralframe::UsageError("--train-fraction must lie in (0, 1)");
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moral-foundation framing features and classifiers"};
  app.set_version_flag("--version", std::string(moralframe::kVersion));
  app.require_subcommand(1);

  using Command = std::function<void(const ExperimentConfig&, std::ostream&)>;
  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"build-axes", {"Build semantic axes from embeddings and a lexicon",
                      moralframe::cli::build_axes}},
      {"score", {"Score a corpus with framing bias and intensity",
                 moralframe::cli::score}},
      {"train-mf", {"Train moral-foundation classifiers on annotations",
                    moralframe::cli::train_mf}},
      {"eval-mf", {"Evaluate moral-foundation classifiers over repeated splits",
                   moralframe::cli::eval_mf}},
      {"partisan", {"Classify headline partisanship per topic",
                    moralframe::cli::partisan}},
      {"correlate", {"Correlation matrices of votes and likelihoods",
                     moralframe::cli::correlate}},
  };
  std::map<std::string, Flags> flags;
  for (const auto& [name, entry] : commands) {
    add_flags(app.add_subcommand(name, entry.first), flags[name]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (const auto& [name, entry] : commands) {
    if (!app.got_subcommand(name)) continue;
    try {
      entry.second(resolve(flags[name]), std::cout);
      return 0;
    } catch (const moralframe::UsageError& e) {
      std::cerr << "moralframe " << name << ": " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "moralframe " << name << ": " << e.what() << "\n";
      return 2;
    }
  }
  return 1;
}
