#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "crof/matrix.hpp"

namespace crof {

struct AdapterConfig {
  std::size_t hidden_ratio = 4;
  double lambda = 0.2;
  double tau = 0.01;
  double lr = 1e-3;
  double weight_decay = 1e-2;
  std::size_t epochs = 50;
  /// 0 means full batch.
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Residual two-layer adapter X* = (1 - lambda) X + lambda ReLU(X W1) W2,
/// with AdamW moment state for both weight matrices.
struct AdapterParams {
  Matrix w1;  // d x h
  Matrix w2;  // h x d
  double lambda = 0.2;

  Matrix m1, v1;  // AdamW moments for w1
  Matrix m2, v2;  // AdamW moments for w2
  std::size_t step_count = 0;

  std::size_t dims() const noexcept { return w1.rows(); }
  std::size_t hidden() const noexcept { return w1.cols(); }
};

struct AdapterGrads {
  Matrix w1;
  Matrix w2;
};

std::size_t hidden_width(std::size_t dims, std::size_t hidden_ratio);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zeroed moments.
AdapterParams init_params(std::size_t dims, const AdapterConfig& cfg);

/// Intermediate values kept for the backward pass.
struct ForwardPass {
  Matrix pre_activation;  // B x h, X W1
  Matrix adapted;         // B x d, X*
};

ForwardPass forward_pass(const Matrix& x, const AdapterParams& p);
Matrix forward(const Matrix& x, const AdapterParams& p);

/// Log-domain similarities z_i = cos(x*, e_i) / tau.
std::vector<double> similarities(std::span<const double> x_star, const Matrix& text, double tau);

/// Similarities for every row of `x_star`: B x n.
Matrix similarities(const Matrix& x_star, const Matrix& text, double tau);

/// Stable softmax over log-similarities.
std::vector<double> probabilities(std::span<const double> z);

/// log(sum_j exp(z_j)), shifted by the maximum.
double log_sum_exp(std::span<const double> z);

/// Cross-entropy -log p_label evaluated from logits.
double ce_loss(std::span<const double> z, std::size_t label);

/// Gradients of (1/B) sum_b g_b . z_b with respect to W1 and W2, where
/// g = `logit_grads` (B x n) and z_b are the similarities of sample b.
AdapterGrads backward(const Matrix& x, const Matrix& text, const AdapterParams& p,
                      const Matrix& logit_grads, double tau);

/// Cosine learning rate: base_lr * 0.5 * (1 + cos(pi * step / total_steps)).
double cosine_lr(double base_lr, std::size_t step, std::size_t total_steps);

/// One AdamW update with bias correction and decoupled weight decay at the
/// cosine-scheduled rate for `step`.
void optimizer_step(AdapterParams& p, const AdapterGrads& grads, std::size_t step,
                    std::size_t total_steps, const AdapterConfig& cfg);

/// Writes <prefix>.w1.emb and <prefix>.w2.emb (both h x d, W1 stored
/// transposed) plus a <prefix>.txt header with lambda, hidden and step.
void save_params(const AdapterParams& p, const std::filesystem::path& prefix);
AdapterParams load_params(const std::filesystem::path& prefix);

}  // namespace crof
