#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "crof/error.hpp"
#include "crof/label_weighting.hpp"
#include "oracle.hpp"

namespace crof {
namespace {

std::vector<double> logs(std::vector<double> s) {
  for (double& v : s) v = std::log(v);
  return s;
}

void expect_near(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

const WeightingParams kDefaults{0.8, 0.8, 0.9};

TEST(Rank, DirectSort) {
  const std::vector<double> z{0.2, 0.9, 0.5};
  const auto rs = rank_original(z, 2, 3);
  EXPECT_EQ(rs.logits, (std::vector<double>{0.9, 0.5, 0.2}));
  EXPECT_EQ(rs.order, (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(rs.rank, 2u);
  EXPECT_EQ(rank_original(z, 1, 3).rank, 1u);
}

TEST(Rank, TiesFavourTheOriginalLabel) {
  const std::vector<double> z{0.7, 0.7, 0.1};
  EXPECT_EQ(rank_original(z, 1, 3).rank, 1u);
  EXPECT_EQ(rank_original(z, 0, 3).rank, 1u);
  const std::vector<double> three{0.4, 0.4, 0.4};
  EXPECT_EQ(rank_original(three, 2, 2).rank, 1u);
}

TEST(Rank, ClampsKAndValidates) {
  const std::vector<double> z{0.1, 0.2};
  EXPECT_EQ(rank_original(z, 0, 10).k, 2u);
  EXPECT_THROW(rank_original(z, 2, 1), Error);
  const std::vector<double> bad{0.1, NAN};
  EXPECT_THROW(rank_original(bad, 0, 1), Error);
}

TEST(Weights, ScenarioOneIsOneHot) {
  const auto wv = compute_weights(rank_original(logs({0.9, 0.7, 0.5}), 0, 3), kDefaults);
  EXPECT_EQ(wv.w, (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(wv.scenario, Scenario::kOneHot);
}

TEST(Weights, ScenarioTwoHandFixture) {
  const auto wv = compute_weights(rank_original(logs({0.9, 0.7, 0.5}), 1, 3), kDefaults);
  expect_near(wv.w, {0.16, 0.8, 0.04}, 1e-12);
  EXPECT_EQ(wv.scenario, Scenario::kTrusted);
  EXPECT_EQ(wv.candidates, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Weights, ScenarioThreeHandFixture) {
  const auto wv = compute_weights(rank_original(logs({0.9, 0.7, 0.5, 0.3, 0.1}), 4, 3), kDefaults);
  expect_near(wv.w, {0.8, 0.066667, 0.133333}, 1e-6);
  EXPECT_EQ(wv.scenario, Scenario::kDiscarded);
}

TEST(Weights, EmptyOthersGiveResidualToTopOne) {
  // K = 2, original at rank 2: w_2 = alpha, w_1 = 1 - alpha.
  const auto two = compute_weights(rank_original(logs({0.9, 0.7, 0.5}), 1, 2), kDefaults);
  expect_near(two.w, {0.2, 0.8}, 1e-15);
  // K = 1 with the original label outside: all mass on the top-1 label.
  const auto one = compute_weights(rank_original(logs({0.9, 0.7, 0.5}), 2, 1), kDefaults);
  EXPECT_EQ(one.w, (std::vector<double>{1.0}));
  EXPECT_EQ(one.scenario, Scenario::kDiscarded);
}

TEST(Weights, TiedOthersSplitUniformly) {
  // Every non-original candidate ties with the top-1 label: zero distances.
  const std::vector<double> z{2.0, 2.0, 2.0, 1.0};
  const auto wv = compute_weights(rank_original(z, 3, 3), kDefaults);
  expect_near(wv.w, {0.8, 0.1, 0.1}, 1e-15);
}

TEST(Weights, AgreeWithReferenceOnRandomInputs) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> param(0.05, 0.95);
  std::uniform_real_distribution<double> sim(0.01, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 12)(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, n)(rng);
    const WeightingParams p{param(rng), param(rng), param(rng)};
    std::vector<double> s(n);
    for (double& v : s) v = sim(rng);
    const std::size_t original = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const auto rs = rank_original(logs(s), original, k);
    auto wv = compute_weights(rs, p);
    normalize_weights(wv, rs);

    std::vector<double> sorted;
    for (std::size_t c : rs.order) sorted.push_back(s[c]);
    const auto ref = oracle::reference_weights(sorted, rs.rank, rs.k, p.alpha, p.beta, p.gamma);
    expect_near(wv.w, ref, 1e-12);
    const std::vector<double> top(sorted.begin(), sorted.begin() + static_cast<long>(rs.k));
    expect_near(wv.w_star, oracle::reference_normalize(top, ref), 1e-12);
  }
}

TEST(Normalize, HandFixture) {
  const auto rs = rank_original(logs({0.9, 0.7, 0.5}), 1, 3);
  auto wv = compute_weights(rs, kDefaults);
  normalize_weights(wv, rs);
  expect_near(wv.w_star, {0.198895, 0.773481, 0.027624}, 1e-6);
}

TEST(Normalize, OneHotIsFixedPoint) {
  const auto rs = rank_original(logs({0.9, 0.7, 0.5}), 0, 3);
  auto wv = compute_weights(rs, kDefaults);
  normalize_weights(wv, rs);
  EXPECT_EQ(wv.w_star, wv.w);
}

TEST(Normalize, EqualSimilaritiesLeaveWeightsUnchanged) {
  const std::vector<double> z{1.0, 1.0, 1.0, 1.0};
  const RankedSimilarities rs = rank_original(z, 0, 3);
  WeightVector wv;
  wv.candidates = {rs.order[0], rs.order[1], rs.order[2]};
  wv.w = {0.5, 0.3, 0.2};
  normalize_weights(wv, rs);
  expect_near(wv.w_star, {0.5, 0.3, 0.2}, 1e-15);
}

TEST(Normalize, HugeLogitsStayFinite) {
  const std::vector<double> z{900.0, 899.0, 850.0, 100.0};
  const auto wv = weigh_sample(z, 1, 3, kDefaults);
  for (double v : wv.w_star) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NO_THROW(check_simplex(wv));
}

TEST(RankBound, Defaults) {
  EXPECT_EQ(max_trusted_rank(kDefaults), 7u);
  EXPECT_EQ(max_trusted_rank({0.8, 0.8, 0.1}), 2u);
}

TEST(RankBound, NoTrustedRankWhenRatioAtLeastOne) {
  // beta / (alpha (1 + beta)) = 0.9 / (0.3 * 1.9) > 1: w_2 never beats w_1.
  EXPECT_EQ(max_trusted_rank({0.3, 0.9, 0.9}), 1u);
  const auto wv = compute_weights(rank_original(logs({0.9, 0.7, 0.5}), 1, 3), {0.3, 0.9, 0.9});
  EXPECT_LT(wv.w[1], wv.w[0]);
}

TEST(Simplex, CheckRejectsBrokenVectors) {
  WeightVector wv;
  wv.candidates = {0, 1};
  wv.w = {0.5, 0.6};
  wv.w_star = {0.5, 0.5};
  EXPECT_THROW(check_simplex(wv), Error);
  wv.w = {1.2, -0.2};
  EXPECT_THROW(check_simplex(wv), Error);
  wv.w = {0.4, 0.6};
  EXPECT_NO_THROW(check_simplex(wv));
}

TEST(WeightingParams, Validation) {
  EXPECT_NO_THROW(kDefaults.validate());
  EXPECT_THROW((WeightingParams{0.0, 0.5, 0.5}).validate(), Error);
  EXPECT_THROW((WeightingParams{0.5, 1.0, 0.5}).validate(), Error);
  EXPECT_THROW((WeightingParams{0.5, 0.5, NAN}).validate(), Error);
}

}  // namespace
}  // namespace crof
