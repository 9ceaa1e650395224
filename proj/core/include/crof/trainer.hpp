#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crof/adapter.hpp"
#include "crof/dataset.hpp"
#include "crof/embedding_store.hpp"
#include "crof/label_weighting.hpp"

namespace crof {

/// Ablation switches: fused prompt embeddings (tpg), adapter fine-tuning
/// (ft) and top-K label weighting (wt).
struct Toggles {
  bool tpg = true;
  bool ft = true;
  bool wt = true;

  /// "tpg+ft+wt", "ft", ... or "none" when everything is off.
  std::string label() const;
  /// Inverse of label(); also accepts "zs" for all-off.
  static Toggles parse(std::string_view text);

  friend bool operator==(const Toggles&, const Toggles&) = default;
};

struct TrainConfig {
  WeightingParams weighting;
  std::size_t top_k = 3;
  AdapterConfig adapter;
  Toggles toggles;
  NoiseSpec noise;
  std::uint64_t seed = 0;
  /// Verify every weight vector against the simplex invariants while training.
  bool check_weights = true;

  void validate() const;
};

struct MetricRow {
  std::size_t epoch = 0;
  std::string split;
  double accuracy = 0.0;  // percent, against clean labels
  double loss = 0.0;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

struct Metrics {
  std::vector<MetricRow> rows;

  /// Header `epoch,split,accuracy,loss`, full-precision decimals.
  std::string to_csv() const;
  double final_test_accuracy() const;
  double best_test_accuracy() const;
};

/// Top-1 accuracy (percent) of argmax cosine similarity against `labels`.
double evaluate(const EmbeddingMatrix& images, std::span<const std::size_t> labels,
                const EmbeddingMatrix& text, double tau);
/// Same, with image features passed through the adapter first.
double evaluate(const EmbeddingMatrix& images, std::span<const std::size_t> labels,
                const EmbeddingMatrix& text, const AdapterParams& params, double tau);

struct TrainResult {
  AdapterParams params;
  Metrics metrics;
};

/// Called with every weight vector produced while training with wt on.
using WeightObserver = std::function<void(const WeightVector&)>;

/// Fine-tunes the adapter on the noisy train labels.
///
/// Each epoch runs forward on the train split, builds per-sample logit
/// gradients (weighted top-K targets with wt on, the noisy one-hot label
/// otherwise), backpropagates and takes one AdamW step per batch on the
/// cosine schedule. Metrics rows for train and test are recorded before
/// training (epoch 0) and after every epoch. With ft off nothing is trained
/// and only the zero-shot epoch-0 rows are recorded.
TrainResult train(const FewShotDataset& ds, const std::optional<EmbeddingMatrix>& text_fused,
                  const EmbeddingMatrix& text_plain, const TrainConfig& cfg,
                  const WeightObserver& observer = {});

struct SweepRow {
  double delta = 0.0;
  std::string toggles;
  std::uint64_t seed = 0;
  double final_acc = 0.0;
  double best_acc = 0.0;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// Runs train() for every (delta, toggle set, seed) cell. Noise of kind
/// base_cfg.noise.kind is injected into the clean labels of `ds` with the
/// cell's seed, which also seeds the adapter. Rows come back ordered by
/// delta, then toggle set, then seed, independent of `jobs`.
std::vector<SweepRow> sweep(const FewShotDataset& ds, const std::optional<EmbeddingMatrix>& text_fused,
                            const EmbeddingMatrix& text_plain, const TrainConfig& base_cfg,
                            std::span<const double> deltas, std::span<const std::uint64_t> seeds,
                            std::span<const Toggles> toggle_sets, std::size_t jobs = 1);

/// Header `delta,toggles,seed,final_acc,best_acc`.
std::string sweep_to_csv(std::span<const SweepRow> rows);

}  // namespace crof
