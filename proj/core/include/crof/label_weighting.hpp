#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace crof {

/// Loyalty, confidence and rank-decay parameters of the top-K weighting.
///
///   alpha  mass granted to the original label when it ranks 2..K, decayed
///          by gamma^(r-2)
///   beta   share of the non-original mass granted to the top-1 label
///   gamma  per-rank decay of the original label's weight
///
/// All three must lie strictly inside (0, 1).
struct WeightingParams {
  double alpha = 0.8;
  double beta = 0.8;
  double gamma = 0.9;

  void validate() const;
};

/// Class logits sorted in descending order together with the 1-based rank of
/// the original (possibly noisy) label.
struct RankedSimilarities {
  std::vector<std::size_t> order;  // class indices, most similar first
  std::vector<double> logits;      // z[order[i]], non-increasing
  std::size_t original = 0;
  std::size_t rank = 1;  // 1-based position of `original` in `order`
  std::size_t k = 1;     // candidate count, clamped to n
};

enum class Scenario {
  kOneHot = 1,     // original label ranks first
  kTrusted = 2,    // original label inside the top-K
  kDiscarded = 3,  // original label outside the top-K
};

std::string_view to_string(Scenario s);

struct WeightVector {
  std::vector<std::size_t> candidates;  // top-K class indices, by rank
  std::vector<double> w;                // raw weights, aligned with candidates
  std::vector<double> w_star;           // similarity-normalized weights
  Scenario scenario = Scenario::kOneHot;
};

/// Stable descending sort of `z`. Among equal logits the original label takes
/// the best position. `k` is clamped to z.size().
RankedSimilarities rank_original(std::span<const double> z, std::size_t original,
                                 std::size_t k);

/// Raw top-K weights for the three scenarios. Distances s*_1 - s*_i are
/// formed from exponentiated logits shifted by the maximum, so any logit
/// scale is safe.
WeightVector compute_weights(const RankedSimilarities& rs, const WeightingParams& params);

/// Fills `w_star`: w*_i proportional to s*_i w_i, computed as a softmax over
/// (logit_i + ln w_i) restricted to w_i > 0. Zero weights stay zero.
void normalize_weights(WeightVector& wv, const RankedSimilarities& rs);

/// Ranks, weighs and normalizes in one call.
WeightVector weigh_sample(std::span<const double> z, std::size_t original, std::size_t k,
                          const WeightingParams& params);

/// Largest rank r at which the original label still outweighs the top-1
/// label in the trusted scenario, i.e. the largest integer r with
///   alpha gamma^(r-2) > (1 - alpha gamma^(r-2)) beta.
/// Returns 1 when no rank >= 2 satisfies it (beta / (alpha (1 + beta)) >= 1).
std::size_t max_trusted_rank(const WeightingParams& params);

/// Throws a value error unless both weight vectors are on the simplex within
/// `tolerance` with every component in [0, 1].
void check_simplex(const WeightVector& wv, double tolerance = 1e-9);

}  // namespace crof
