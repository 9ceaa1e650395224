#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "crof/embedding_store.hpp"

namespace crof {

/// Image embeddings with clean and noisy labels.
///
/// Rows are laid out train split first (`shots` rows per class, class-major),
/// followed by the test split. Noise only ever touches the train split.
struct FewShotDataset {
  EmbeddingMatrix images;
  std::vector<std::size_t> clean_labels;
  std::vector<std::size_t> noisy_labels;
  std::size_t n_classes = 0;
  std::size_t shots = 0;
  std::vector<std::string> class_names;

  std::size_t train_rows() const noexcept { return n_classes * shots; }
  std::size_t test_rows() const noexcept { return images.rows() - train_rows(); }

  EmbeddingMatrix train_images() const { return images.slice_rows(0, train_rows()); }
  EmbeddingMatrix test_images() const { return images.slice_rows(train_rows(), images.rows()); }
  std::vector<std::size_t> train_clean() const;
  std::vector<std::size_t> train_noisy() const;
  std::vector<std::size_t> test_clean() const;

  /// Throws a config error when any dataset invariant does not hold.
  void validate() const;
};

enum class NoiseKind { kSymmetric, kAsymmetric };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view text);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kSymmetric;
  double delta = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  FewShotDataset dataset;
  /// n_classes x dims unit rows; doubles as the class text embeddings.
  EmbeddingMatrix prototypes;
};

/// Gaussian clusters around random unit prototypes. Each image embedding is
/// normalize(prototype + sigma * N(0, I)). Deterministic for a given seed.
SyntheticData generate_synthetic(std::size_t n_classes, std::size_t dims, std::size_t shots,
                                 std::size_t test_per_class, double sigma, std::uint64_t seed);

/// Number of train samples corrupted per class: floor(delta * shots + 0.5).
std::size_t corrupted_per_class(double delta, std::size_t shots);

/// Corrupts exactly corrupted_per_class() train labels in each class.
/// Symmetric noise draws the replacement uniformly from the other classes;
/// asymmetric noise maps class c to (c + 1) mod n.
FewShotDataset inject_noise(const FewShotDataset& ds, const NoiseSpec& spec);

/// Dataset directory layout: images.emb, labels.txt, classes.txt and, when
/// present, noisy_labels.txt. The split point comes from `shots`.
struct DatasetFiles {
  static constexpr std::string_view kImages = "images.emb";
  static constexpr std::string_view kLabels = "labels.txt";
  static constexpr std::string_view kNoisyLabels = "noisy_labels.txt";
  static constexpr std::string_view kClassNames = "classes.txt";
  static constexpr std::string_view kPrototypes = "prototypes.emb";
};

void save_dataset(const FewShotDataset& ds, const std::filesystem::path& dir);
FewShotDataset load_dataset(const std::filesystem::path& dir, std::size_t shots,
                            const std::filesystem::path& noisy_labels = {});

}  // namespace crof
