#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "themescope/corpus.hpp"
#include "themescope/embeddings.hpp"
#include "themescope/sdg.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}
inline double real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

themescope::SdgLabel label(Rng& rng);
/// Labels drawn from a small random alphabet so that matches are common.
std::vector<themescope::SdgLabel> labels(Rng& rng, std::size_t n);

/// Distinct values with no ties.
std::vector<double> distinct_values(Rng& rng, std::size_t n);
/// Small integers, ties likely.
std::vector<double> tied_values(Rng& rng, std::size_t n);

/// Text mixing words, punctuation, unicode and hashtags.
std::string text(Rng& rng);
/// Arbitrary bytes biased towards the label grammar.
std::string noisy_response(Rng& rng);

themescope::CompanyTable companies(Rng& rng, std::size_t n);
/// Posts over the given companies; about half carry SDG hashtags from the
/// built-in map. Media ids are unique ("m<post>_<k>").
std::vector<themescope::Post> posts(Rng& rng, const themescope::CompanyTable& companies, std::size_t n);

/// Unit-norm-ish rows clustered around a few random centres.
themescope::EmbeddingMatrix clustered_matrix(Rng& rng, std::size_t n, std::size_t dim, std::size_t centres,
                                             double spread);

}  // namespace gen
