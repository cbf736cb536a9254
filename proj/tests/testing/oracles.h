#ifndef MORALFRAME_TESTS_TESTING_ORACLES_H_
#define MORALFRAME_TESTS_TESTING_ORACLES_H_

// Straightforward reference implementations that share no code with the
// library. They work on raw token lists and plain vectors.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moralframe/embedding_store.h"
#include "moralframe/lexicon.h"

namespace moralframe::oracle {

using Vec = std::vector<double>;

double cosine(const Vec& u, const Vec& v);

// Mean of found virtue vectors minus mean of found vice vectors.
Vec axis(const EmbeddingStore& store, const std::vector<std::string>& virtues,
         const std::vector<std::string>& vices);

// Lowercase ASCII tokens of letters and apostrophes, edges trimmed.
std::vector<std::string> tokens(const std::string& text);

// Sum over token occurrences of cos / count of in-vocabulary occurrences.
std::optional<double> bias(const std::vector<std::string>& tokens,
                           const Vec& axis, const EmbeddingStore& store);
std::optional<double> intensity(const std::vector<std::string>& tokens,
                                const Vec& axis, double baseline,
                                const EmbeddingStore& store);

struct Confusion {
  double tp = 0, fp = 0, tn = 0, fn = 0;
};
Confusion confusion(const std::vector<int>& predicted,
                    const std::vector<int>& truth);

struct Scores {
  double precision, recall, f1, accuracy;
};
// Support-weighted two-class scores, 0/0 = 0.
Scores weighted_scores(const std::vector<int>& predicted,
                       const std::vector<int>& truth);

// Two-pass covariance / standard deviation in long double.
std::optional<double> pearson(const Vec& x, const Vec& y);

// Mean logistic loss plus l2/(2n)|w|^2 on the given (already scaled) rows.
double logistic_loss(const std::vector<Vec>& rows, const std::vector<int>& y,
                     const Vec& w, double b, double l2);

}  // namespace moralframe::oracle

#endif  // MORALFRAME_TESTS_TESTING_ORACLES_H_
