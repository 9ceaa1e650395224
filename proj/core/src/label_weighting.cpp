#include "crof/label_weighting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "crof/error.hpp"

namespace crof {
namespace {

bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

// Spreads `mass` over `positions` in proportion to their distance from the
// top-1 similarity; uniformly when every distance is zero.
void spread_by_distance(std::vector<double>& w, const std::vector<std::size_t>& positions,
                        const std::vector<double>& distance, double mass) {
  if (positions.empty()) return;
  double denom = 0.0;
  for (std::size_t i : positions) denom += distance[i];
  if (denom > 0.0) {
    for (std::size_t i : positions) w[i] = mass * distance[i] / denom;
  } else {
    const double share = mass / static_cast<double>(positions.size());
    for (std::size_t i : positions) w[i] = share;
  }
}

}  // namespace

void WeightingParams::validate() const {
  require(in_open_unit(alpha), ErrorKind::kConfig, "alpha must lie in (0, 1)");
  require(in_open_unit(beta), ErrorKind::kConfig, "beta must lie in (0, 1)");
  require(in_open_unit(gamma), ErrorKind::kConfig, "gamma must lie in (0, 1)");
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::kOneHot: return "1";
    case Scenario::kTrusted: return "2";
    case Scenario::kDiscarded: return "3";
  }
  return "?";
}

RankedSimilarities rank_original(std::span<const double> z, std::size_t original,
                                 std::size_t k) {
  const std::size_t n = z.size();
  require(n >= 1, ErrorKind::kSize, "cannot rank an empty logit vector");
  if (original >= n) {
    fail(ErrorKind::kIndex, "original label " + std::to_string(original) +
                                " out of range for " + std::to_string(n) + " classes");
  }
  require(k >= 1, ErrorKind::kConfig, "top-K must be >= 1");
  for (double v : z) {
    if (!std::isfinite(v)) fail(ErrorKind::kValue, "non-finite logit");
  }

  RankedSimilarities rs;
  rs.original = original;
  rs.k = std::min(k, n);
  rs.order.resize(n);
  std::iota(rs.order.begin(), rs.order.end(), std::size_t{0});
  std::ranges::stable_sort(rs.order, [&](std::size_t a, std::size_t b) {
    if (z[a] != z[b]) return z[a] > z[b];
    return a == original && b != original;
  });
  rs.logits.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    rs.logits[i] = z[rs.order[i]];
    if (rs.order[i] == original) rs.rank = i + 1;
  }
  return rs;
}

WeightVector compute_weights(const RankedSimilarities& rs, const WeightingParams& params) {
  params.validate();
  const std::size_t k = rs.k;
  require(k >= 1 && k <= rs.order.size(), ErrorKind::kConfig, "top-K out of range");

  WeightVector wv;
  wv.candidates.assign(rs.order.begin(), rs.order.begin() + static_cast<std::ptrdiff_t>(k));
  wv.w.assign(k, 0.0);

  if (rs.rank == 1) {
    wv.scenario = Scenario::kOneHot;
    wv.w[0] = 1.0;
    return wv;
  }

  // s*_1 - s*_i in units of s*_1, i.e. 1 - exp(z_i - z_1).
  std::vector<double> distance(k, 0.0);
  for (std::size_t i = 1; i < k; ++i) distance[i] = -std::expm1(rs.logits[i] - rs.logits[0]);

  std::vector<std::size_t> others;
  if (rs.rank <= k) {
    wv.scenario = Scenario::kTrusted;
    const std::size_t r = rs.rank - 1;
    const double loyalty = params.alpha * std::pow(params.gamma, static_cast<double>(rs.rank - 2));
    for (std::size_t i = 1; i < k; ++i) {
      if (i != r) others.push_back(i);
    }
    wv.w[r] = loyalty;
    if (others.empty()) {
      wv.w[0] = 1.0 - loyalty;
    } else {
      wv.w[0] = (1.0 - loyalty) * params.beta;
      spread_by_distance(wv.w, others, distance, (1.0 - loyalty) * (1.0 - params.beta));
    }
  } else {
    wv.scenario = Scenario::kDiscarded;
    for (std::size_t i = 1; i < k; ++i) others.push_back(i);
    if (others.empty()) {
      wv.w[0] = 1.0;
    } else {
      wv.w[0] = params.beta;
      spread_by_distance(wv.w, others, distance, 1.0 - params.beta);
    }
  }
  return wv;
}

void normalize_weights(WeightVector& wv, const RankedSimilarities& rs) {
  const std::size_t k = wv.w.size();
  require(k <= rs.logits.size(), ErrorKind::kShape, "weight vector longer than ranking");
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> score(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (wv.w[i] > 0.0) {
      score[i] = rs.logits[i] + std::log(wv.w[i]);
      top = std::max(top, score[i]);
    }
  }
  require(std::isfinite(top), ErrorKind::kValue, "all raw weights are zero");
  wv.w_star.assign(k, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (wv.w[i] > 0.0) {
      wv.w_star[i] = std::exp(score[i] - top);
      total += wv.w_star[i];
    }
  }
  for (double& v : wv.w_star) v /= total;
}

WeightVector weigh_sample(std::span<const double> z, std::size_t original, std::size_t k,
                          const WeightingParams& params) {
  const RankedSimilarities rs = rank_original(z, original, k);
  WeightVector wv = compute_weights(rs, params);
  normalize_weights(wv, rs);
  return wv;
}

std::size_t max_trusted_rank(const WeightingParams& params) {
  params.validate();
  const double ratio = params.beta / (params.alpha * (1.0 + params.beta));
  if (ratio >= 1.0) return 1;
  const double bound = 2.0 + std::log(ratio) / std::log(params.gamma);
  if (bound >= 1e15) return static_cast<std::size_t>(1e15);
  // Largest integer strictly below the bound.
  return static_cast<std::size_t>(std::ceil(bound)) - 1;
}

void check_simplex(const WeightVector& wv, double tolerance) {
  auto check = [&](const std::vector<double>& v, const char* name) {
    double sum = 0.0;
    for (double x : v) {
      if (!(x >= 0.0 && x <= 1.0)) {
        fail(ErrorKind::kValue, std::string(name) + " has a component outside [0, 1]");
      }
      sum += x;
    }
    if (std::abs(sum - 1.0) > tolerance) {
      fail(ErrorKind::kValue, std::string(name) + " sums to " + std::to_string(sum));
    }
  };
  check(wv.w, "w");
  if (!wv.w_star.empty()) check(wv.w_star, "w_star");
}

}  // namespace crof
