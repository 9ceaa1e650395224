#include "crof/objective.hpp"

#include <string>

#include "crof/adapter.hpp"
#include "crof/error.hpp"

namespace crof {

SampleObjective make_sample_objective(std::span<const double> z,
                                      std::vector<std::size_t> candidates,
                                      std::vector<double> w_star) {
  require(!z.empty(), ErrorKind::kSize, "empty logit vector");
  require(candidates.size() == w_star.size(), ErrorKind::kShape,
          "candidate and weight counts differ");
  for (std::size_t c : candidates) {
    if (c >= z.size()) fail(ErrorKind::kIndex, "candidate class " + std::to_string(c) + " out of range");
  }
  SampleObjective so;
  so.z.assign(z.begin(), z.end());
  so.p = probabilities(z);
  so.candidates = std::move(candidates);
  so.w_star = std::move(w_star);
  return so;
}

double CrossEntropyLoss::loss(const SampleObjective& so, std::size_t label) const {
  return ce_loss(so.z, label);
}

void CrossEntropyLoss::accumulate_gradient(const SampleObjective& so, std::size_t label,
                                           double weight, std::span<double> grad) const {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double target = i == label ? 1.0 : 0.0;
    grad[i] += weight * (so.p[i] - target);
  }
}

const BaseLoss& cross_entropy() {
  static const CrossEntropyLoss instance;
  return instance;
}

double weighted_loss(const SampleObjective& so, const BaseLoss& base) {
  double acc = 0.0;
  for (std::size_t k = 0; k < so.candidates.size(); ++k) {
    if (so.w_star[k] == 0.0) continue;
    acc += so.w_star[k] * base.loss(so, so.candidates[k]);
  }
  return acc;
}

std::vector<double> logit_gradient(const SampleObjective& so, const BaseLoss& base) {
  std::vector<double> grad(so.z.size(), 0.0);
  for (std::size_t k = 0; k < so.candidates.size(); ++k) {
    if (so.w_star[k] == 0.0) continue;
    base.accumulate_gradient(so, so.candidates[k], so.w_star[k], grad);
  }
  return grad;
}

std::pair<double, std::vector<double>> plain_ce(const SampleObjective& so, std::size_t label) {
  if (label >= so.z.size()) fail(ErrorKind::kIndex, "label " + std::to_string(label) + " out of range");
  // Same operation sequence as the weighted path with w* one-hot on `label`.
  const BaseLoss& ce = cross_entropy();
  double loss = 0.0;
  loss += 1.0 * ce.loss(so, label);
  std::vector<double> grad(so.z.size(), 0.0);
  ce.accumulate_gradient(so, label, 1.0, grad);
  return {loss, std::move(grad)};
}

}  // namespace crof
