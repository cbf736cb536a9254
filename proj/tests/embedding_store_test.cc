#include "moralframe/embedding_store.h"

#include <cmath>

#include <gtest/gtest.h>

#include "moralframe/error.h"
#include "moralframe/random.h"
#include "testing/synthetic.h"

namespace moralframe {
namespace {

using testing::TempDir;
using testing::write_text;

LoadedEmbeddings load_string(const TempDir& dir, const std::string& text,
                             LoadOptions options = {}) {
  write_text(dir.file("vectors.txt"), text);
  return load_embeddings(dir.file("vectors.txt"), options);
}

void expect_conserved(const LoadReport& r) {
  EXPECT_EQ(r.lines_read, r.entries_kept + r.duplicates_skipped + r.malformed_skipped);
}

TEST(LoadEmbeddings, MinimalFile) {
  TempDir dir;
  auto loaded = load_string(dir, "cat 1.0 0.0\ndog 0.0 1.0\n");
  EXPECT_EQ(loaded.store.dimension(), 2u);
  EXPECT_EQ(loaded.store.size(), 2u);
  EXPECT_EQ(loaded.report.entries_kept, 2u);
  expect_conserved(loaded.report);
}

TEST(LoadEmbeddings, DuplicateKeepsFirst) {
  TempDir dir;
  auto loaded = load_string(dir, "cat 1.0 0.0\ndog 0.0 1.0\ncat 9.0 9.0\n");
  EXPECT_EQ(loaded.store.size(), 2u);
  EXPECT_EQ(loaded.report.duplicates_skipped, 1u);
  auto cat = loaded.store.lookup("cat");
  ASSERT_TRUE(cat);
  EXPECT_EQ((*cat)[0], 1.0);
  EXPECT_EQ((*cat)[1], 0.0);
  expect_conserved(loaded.report);
}

TEST(LoadEmbeddings, DuplicateAfterLowercasing) {
  TempDir dir;
  auto loaded = load_string(dir, "Cat 1 0\nCAT 2 2\n");
  EXPECT_EQ(loaded.store.size(), 1u);
  EXPECT_EQ(loaded.report.duplicates_skipped, 1u);
}

TEST(LoadEmbeddings, FiveLineFixtureWithWrongArity) {
  // Lines: ok, ok, 3 components (malformed), unparsable (malformed), ok.
  TempDir dir;
  auto loaded = load_string(dir,
                            "a 1 0\n"
                            "b 0 1\n"
                            "c 1 2 3\n"
                            "d 1 x\n"
                            "e -1 0.5\n");
  EXPECT_EQ(loaded.report.lines_read, 5u);
  EXPECT_EQ(loaded.report.entries_kept, 3u);
  EXPECT_EQ(loaded.report.malformed_skipped, 2u);
  EXPECT_FALSE(loaded.store.contains("c"));
  EXPECT_FALSE(loaded.store.contains("d"));
  EXPECT_TRUE(loaded.store.contains("e"));
  expect_conserved(loaded.report);
}

TEST(LoadEmbeddings, AllZeroAndNonFiniteLinesAreMalformed) {
  TempDir dir;
  auto loaded = load_string(dir, "a 1 0\nz 0 0\nn nan 1\ni 1 inf\n");
  EXPECT_EQ(loaded.report.entries_kept, 1u);
  EXPECT_EQ(loaded.report.malformed_skipped, 3u);
  expect_conserved(loaded.report);
}

TEST(LoadEmbeddings, HeaderLineIsSkipped) {
  TempDir dir;
  auto loaded = load_string(dir, "2 3\na 1 0 0\nb 0 1 0\n");
  EXPECT_EQ(loaded.store.dimension(), 3u);
  EXPECT_EQ(loaded.store.size(), 2u);
  EXPECT_TRUE(loaded.report.header_skipped);
  expect_conserved(loaded.report);
}

TEST(LoadEmbeddings, ExpectedDimension) {
  TempDir dir;
  LoadOptions options;
  options.expected_dimension = 2;
  EXPECT_EQ(load_string(dir, "a 1 0\n", options).store.dimension(), 2u);
  options.expected_dimension = 3;
  EXPECT_THROW(load_string(dir, "a 1 0\nb 0 1\n", options), DataError);
}

TEST(LoadEmbeddings, Errors) {
  TempDir dir;
  EXPECT_THROW(load_embeddings(dir.file("missing.txt")), DataError);
  EXPECT_THROW(load_string(dir, ""), DataError);
  EXPECT_THROW(load_string(dir, "a b c\nd\n"), DataError);
}

TEST(LoadEmbeddings, UnitNormalize) {
  TempDir dir;
  LoadOptions options;
  options.unit_normalize = true;
  auto loaded = load_string(dir, "a 3 4\n", options);
  auto a = *loaded.store.lookup("a");
  EXPECT_DOUBLE_EQ(a[0], 0.6);
  EXPECT_DOUBLE_EQ(a[1], 0.8);
}

TEST(Lookup, CaseFoldingAndAbsence) {
  TempDir dir;
  auto loaded = load_string(dir, "cat 1.0 0.0\ndog 0.0 1.0\n");
  auto cat = loaded.store.lookup("CAT");
  ASSERT_TRUE(cat);
  EXPECT_EQ((*cat)[0], 1.0);
  EXPECT_EQ((*cat)[1], 0.0);
  EXPECT_FALSE(loaded.store.lookup("fish"));
}

TEST(Lookup, MatchesIndependentReparse) {
  TempDir dir;
  Rng rng(7);
  std::string text;
  std::vector<std::pair<std::string, std::vector<double>>> expected;
  for (int i = 0; i < 10; ++i) {
    std::string word = testing::letter_word("word", i);
    std::vector<double> v(4);
    text += word;
    for (auto& x : v) {
      x = std::round(rng.normal() * 1e6) / 1e6;
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.6f", x);
      text += buf;
    }
    text += "\n";
    expected.emplace_back(word, v);
  }
  auto loaded = load_string(dir, text);
  for (const auto& [word, v] : expected) {
    auto got = loaded.store.lookup(word);
    ASSERT_TRUE(got) << word;
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ((*got)[i], v[i]);
  }
}

TEST(EmbeddingStore, AddRejectsBadVectors) {
  EmbeddingStore store(2);
  const std::vector<double> ok = {1, 2}, zero = {0, 0}, wrong = {1, 2, 3};
  const std::vector<double> nan = {std::nan(""), 1};
  EXPECT_TRUE(store.add("a", ok));
  EXPECT_FALSE(store.add("A", ok));
  EXPECT_THROW(store.add("b", zero), DataError);
  EXPECT_THROW(store.add("c", wrong), DataError);
  EXPECT_THROW(store.add("d", nan), DataError);
  EXPECT_EQ(store.size(), 1u);
}

TEST(EmbeddingStore, WriteReloadRoundTrip) {
  TempDir dir;
  auto store = testing::random_store(50, 7, 11);
  write_embeddings(store, dir.file("out.txt"));
  auto reloaded = load_embeddings(dir.file("out.txt")).store;
  ASSERT_EQ(reloaded.size(), store.size());
  for (const auto& w : store.words()) {
    auto a = *store.lookup(w);
    auto b = *reloaded.lookup(w);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  }
}

TEST(Cosine, Examples) {
  const std::vector<double> v = {0.3, -2.0, 5.5};
  EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-15);
  EXPECT_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 2}, std::vector<double>{3, 4}),
              11.0 / (std::sqrt(5.0) * 5.0), 1e-15);
}

TEST(Cosine, Errors) {
  EXPECT_THROW(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}),
               DataError);
  EXPECT_THROW(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0}),
               DataError);
}

TEST(Cosine, ScaleInvarianceAndAntisymmetry) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> u(6), v(6), su(6), sv(6), nu(6);
    double a = 0.01 + 100 * rng.uniform(), b = 0.01 + 100 * rng.uniform();
    for (int i = 0; i < 6; ++i) {
      u[i] = rng.normal();
      v[i] = rng.normal();
      su[i] = a * u[i];
      sv[i] = b * v[i];
      nu[i] = -u[i];
    }
    double c = cosine_similarity(u, v);
    EXPECT_NEAR(cosine_similarity(su, sv), c, 1e-9);
    EXPECT_NEAR(cosine_similarity(nu, v), -c, 1e-12);
    EXPECT_LE(std::abs(c), 1.0);
  }
}

TEST(Cosine, ClampedForParallelVectors) {
  const std::vector<double> u = {1e-3, 3e-3, 7e-3};
  const std::vector<double> v = {1e3, 3e3, 7e3};
  double c = cosine_similarity(u, v);
  EXPECT_LE(c, 1.0);
  EXPECT_GE(cosine_similarity(u, std::vector<double>{-1e3, -3e3, -7e3}), -1.0);
}

}  // namespace
}  // namespace moralframe
