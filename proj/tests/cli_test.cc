#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "moralframe/csv.h"
#include "moralframe/embedding_store.h"
#include "moralframe/lexicon.h"
#include "testing/synthetic.h"

namespace mf = moralframe;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    auto planted = mf::testing::planted_partisan_corpus({}, 17);
    mf::write_embeddings(planted.store, file("vectors.txt"));
    mf::write_lexicon(planted.lexicon, file("lexicon.json"));
    mf::testing::write_text(file("leanings.json"),
                            R"({"liberal outlet": "liberal", "conservative outlet": "right"})");
    mf::testing::write_text(file("topics.json"), R"({"planted": ["news"]})");
    std::ostringstream headlines, annotations;
    headlines << "id,headline,publication\n";
    annotations << "id,text,annotators,first\n";
    for (const auto& h : planted.headlines.records) {
      headlines << h.id << "," << h.text << "," << h.source << "\n";
      annotations << h.id << "," << h.text << ",3," << (h.leaning ? 2 : 0) << "\n";
    }
    mf::testing::write_text(file("headlines.csv"), headlines.str());
    mf::testing::write_text(file("annotations.csv"), annotations.str());
  }

  std::string file(const std::string& name) const { return dir_.file(name); }

  // Runs the CLI and returns its exit status; output goes to <out>.log.
  int run(const std::string& args) {
    std::string cmd = std::string("\"") + MORALFRAME_CLI + "\" " + args + " > \"" +
                      file("last.log") + "\" 2>&1";
    int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }

  std::string log() const { return mf::testing::read_text(file("last.log")); }

  std::string frame_flags() const {
    return " --embeddings " + file("vectors.txt") + " --lexicon " + file("lexicon.json");
  }

  nlohmann::json manifest(const std::string& out) const {
    return nlohmann::json::parse(mf::testing::read_text(out + "/manifest.json"));
  }

  mf::testing::TempDir dir_;
};

TEST_F(Cli, VersionAndHelpExitZero) {
  EXPECT_EQ(run("--version"), 0);
  EXPECT_NE(log().find("0.1.0"), std::string::npos);
  EXPECT_EQ(run("score --help"), 0);
}

TEST_F(Cli, MissingSubcommandOrOutIsUsageError) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("score" + frame_flags() + " --corpus " + file("headlines.csv")), 1);
  EXPECT_EQ(run("frobnicate --out " + file("x")), 1);
}

TEST_F(Cli, BadModeIsUsageError) {
  EXPECT_EQ(run("eval-mf --mode sideways --annotations " + file("annotations.csv") +
                frame_flags() + " --out " + file("o")),
            1);
}

TEST_F(Cli, MissingRequiredInputIsUsageError) {
  EXPECT_EQ(run("score --out " + file("o") + " --corpus " + file("headlines.csv")), 1);
  EXPECT_NE(log().find("--embeddings"), std::string::npos);
}

TEST_F(Cli, UnreadableDataIsDataError) {
  EXPECT_EQ(run("score --embeddings " + file("absent.txt") + " --corpus " +
                file("headlines.csv") + " --out " + file("o")),
            2);
  mf::testing::write_text(file("bad.txt"), "alpha 1 2\nbeta 1 2 3\n");
  EXPECT_EQ(run("score --embeddings " + file("bad.txt") + " --corpus " +
                file("headlines.csv") + " --out " + file("o")),
            2);
}

TEST_F(Cli, ConfigErrorsAreUsageErrors) {
  mf::testing::write_text(file("unknown.json"), R"({"splitz": 3})");
  EXPECT_EQ(run("score" + frame_flags() + " --corpus " + file("headlines.csv") +
                " --config " + file("unknown.json") + " --out " + file("o")),
            1);
  mf::testing::write_text(file("zero.json"), R"({"splits": 0})");
  EXPECT_EQ(run("eval-mf" + frame_flags() + " --annotations " + file("annotations.csv") +
                " --config " + file("zero.json") + " --out " + file("o")),
            1);
  EXPECT_EQ(run("eval-mf" + frame_flags() + " --annotations " + file("annotations.csv") +
                " --train-fraction 1.5 --out " + file("o")),
            1);
}

TEST_F(Cli, BuildAxesWritesAxesCoverageAndManifest) {
  std::string out = file("axes");
  ASSERT_EQ(run("build-axes" + frame_flags() + " --corpus " + file("headlines.csv") +
                " --out " + out),
            0)
      << log();
  EXPECT_TRUE(fs::exists(out + "/axes.json"));
  EXPECT_TRUE(fs::exists(out + "/coverage.csv"));
  auto m = manifest(out);
  EXPECT_EQ(m["tool"], "moralframe");
  EXPECT_EQ(m["version"], "0.1.0");
  EXPECT_EQ(m["command"], "build-axes");
}

TEST_F(Cli, ScoreReusesSavedAxes) {
  std::string axes = file("axes");
  ASSERT_EQ(run("build-axes" + frame_flags() + " --corpus " + file("headlines.csv") +
                " --out " + axes),
            0);
  ASSERT_EQ(run("score" + frame_flags() + " --corpus " + file("headlines.csv") + " --out " +
                file("s1")),
            0)
      << log();
  ASSERT_EQ(run("score" + frame_flags() + " --corpus " + file("headlines.csv") + " --axes " +
                axes + "/axes.json --out " + file("s2")),
            0)
      << log();
  auto a = mf::testing::read_text(file("s1") + "/scores.csv");
  EXPECT_EQ(a, mf::testing::read_text(file("s2") + "/scores.csv"));
  EXPECT_NE(a.find("dima_bias"), std::string::npos);
}

TEST_F(Cli, EvalManifestRecordsSeeds) {
  std::string out = file("eval");
  ASSERT_EQ(run("eval-mf" + frame_flags() + " --annotations " + file("annotations.csv") +
                " --splits 2 --seed 9 --out " + out),
            0)
      << log();
  EXPECT_TRUE(fs::exists(out + "/mf_table.csv"));
  auto m = manifest(out);
  EXPECT_EQ(m["seeds"]["base"], 9);
  EXPECT_EQ(m["seeds"]["splits"], nlohmann::json::array({9, 10}));
}

TEST_F(Cli, PartisanReportsMissingLikelihoodsAsUnavailable) {
  std::string out = file("partisan");
  ASSERT_EQ(run("partisan" + frame_flags() + " --corpus " + file("headlines.csv") +
                " --leanings " + file("leanings.json") + " --topics " + file("topics.json") +
                " --splits 2 --out " + out),
            0)
      << log();
  EXPECT_NE(log().find("unavailable"), std::string::npos);
  auto m = manifest(out);
  ASSERT_FALSE(m["details"]["unavailable"].empty());
  auto table = mf::testing::read_text(out + "/partisan_table.csv");
  EXPECT_NE(table.find("frame_axis"), std::string::npos);
  EXPECT_NE(table.find("planted"), std::string::npos);
  EXPECT_TRUE(fs::exists(out + "/coefficients.csv"));
}

TEST_F(Cli, TrainThenPartisanWithModels) {
  std::string train = file("train");
  ASSERT_EQ(run("train-mf" + frame_flags() + " --annotations " + file("annotations.csv") +
                " --out " + train),
            0)
      << log();
  EXPECT_TRUE(fs::exists(train + "/models/model_set.json"));
  EXPECT_TRUE(fs::exists(train + "/training.csv"));
  std::string out = file("partisan");
  ASSERT_EQ(run("partisan" + frame_flags() + " --corpus " + file("headlines.csv") +
                " --leanings " + file("leanings.json") + " --topics " + file("topics.json") +
                " --models " + train + "/models --splits 2 --out " + out),
            0)
      << log();
  EXPECT_TRUE(manifest(out)["details"]["unavailable"].empty());
  auto table = mf::testing::read_text(out + "/partisan_table.csv");
  EXPECT_NE(table.find("mf_likelihood+frame_axis"), std::string::npos);
}

TEST_F(Cli, CorruptModelSetIsDataError) {
  fs::create_directories(file("models"));
  mf::testing::write_text(file("models") + "/model_set.json",
                          R"({"schema_version": 999, "kind": "mf_model_set"})");
  EXPECT_EQ(run("partisan" + frame_flags() + " --corpus " + file("headlines.csv") +
                " --leanings " + file("leanings.json") + " --topics " + file("topics.json") +
                " --models " + file("models") + " --out " + file("o")),
            2);
}

}  // namespace
