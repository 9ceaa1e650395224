#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace crof {

/// One sample's logits with the candidate classes and their weights.
struct SampleObjective {
  std::vector<std::size_t> candidates;
  std::vector<double> w_star;
  std::vector<double> p;  // softmax(z)
  std::vector<double> z;
};

SampleObjective make_sample_objective(std::span<const double> z,
                                      std::vector<std::size_t> candidates,
                                      std::vector<double> w_star);

/// Per-sample loss against a single hard label. The weighted objective is a
/// w*-weighted sum of these over the candidate set, so any base loss with a
/// logit gradient plugs in here.
class BaseLoss {
 public:
  virtual ~BaseLoss() = default;
  virtual double loss(const SampleObjective& so, std::size_t label) const = 0;
  /// Adds `weight` times d loss(label) / dz into `grad`.
  virtual void accumulate_gradient(const SampleObjective& so, std::size_t label, double weight,
                                   std::span<double> grad) const = 0;
};

class CrossEntropyLoss final : public BaseLoss {
 public:
  double loss(const SampleObjective& so, std::size_t label) const override;
  void accumulate_gradient(const SampleObjective& so, std::size_t label, double weight,
                           std::span<double> grad) const override;
};

const BaseLoss& cross_entropy();

/// sum_k w*_k * base(z, candidate_k).
double weighted_loss(const SampleObjective& so, const BaseLoss& base = cross_entropy());

/// d weighted_loss / dz. For cross-entropy this is p - sum_k w*_k onehot(c_k).
std::vector<double> logit_gradient(const SampleObjective& so,
                                   const BaseLoss& base = cross_entropy());

/// Plain cross-entropy on one label and its gradient p - onehot(label).
std::pair<double, std::vector<double>> plain_ce(const SampleObjective& so, std::size_t label);

}  // namespace crof
