#include "crof/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "crof/error.hpp"

namespace crof {
namespace {

std::vector<std::size_t> slice(const std::vector<std::size_t>& v, std::size_t begin,
                               std::size_t end) {
  return {v.begin() + static_cast<std::ptrdiff_t>(begin),
          v.begin() + static_cast<std::ptrdiff_t>(end)};
}

}  // namespace

std::vector<std::size_t> FewShotDataset::train_clean() const {
  return slice(clean_labels, 0, train_rows());
}
std::vector<std::size_t> FewShotDataset::train_noisy() const {
  return slice(noisy_labels, 0, train_rows());
}
std::vector<std::size_t> FewShotDataset::test_clean() const {
  return slice(clean_labels, train_rows(), clean_labels.size());
}

void FewShotDataset::validate() const {
  require(n_classes >= 2, ErrorKind::kConfig, "dataset needs at least two classes");
  require(shots >= 1, ErrorKind::kConfig, "dataset needs at least one shot per class");
  require(clean_labels.size() == images.rows() && noisy_labels.size() == images.rows(),
          ErrorKind::kShape,
          "label count does not match image rows (" + std::to_string(images.rows()) + ")");
  require(class_names.size() == n_classes, ErrorKind::kShape,
          std::to_string(class_names.size()) + " class names for " + std::to_string(n_classes) +
              " classes");
  require(train_rows() <= images.rows(), ErrorKind::kShape,
          "train split of " + std::to_string(train_rows()) + " rows exceeds the " +
              std::to_string(images.rows()) + " available");
  for (std::size_t i = 0; i < images.rows(); ++i) {
    if (clean_labels[i] >= n_classes || noisy_labels[i] >= n_classes) {
      fail(ErrorKind::kIndex, "label at row " + std::to_string(i) + " is not below " +
                                  std::to_string(n_classes));
    }
  }
  std::vector<std::size_t> per_class(n_classes, 0);
  for (std::size_t i = 0; i < train_rows(); ++i) ++per_class[clean_labels[i]];
  for (std::size_t c = 0; c < n_classes; ++c) {
    require(per_class[c] == shots, ErrorKind::kConfig,
            "class " + std::to_string(c) + " has " + std::to_string(per_class[c]) +
                " train samples, expected " + std::to_string(shots));
  }
}

std::string_view to_string(NoiseKind kind) {
  return kind == NoiseKind::kSymmetric ? "symmetric" : "asymmetric";
}

NoiseKind parse_noise_kind(std::string_view text) {
  if (text == "symmetric" || text == "sym") return NoiseKind::kSymmetric;
  if (text == "asymmetric" || text == "asym") return NoiseKind::kAsymmetric;
  fail(ErrorKind::kConfig, "unknown noise kind '" + std::string(text) + "'");
}

SyntheticData generate_synthetic(std::size_t n_classes, std::size_t dims, std::size_t shots,
                                 std::size_t test_per_class, double sigma, std::uint64_t seed) {
  require(n_classes >= 2, ErrorKind::kConfig, "synthetic data needs at least two classes");
  require(dims >= 2, ErrorKind::kConfig, "synthetic data needs at least two dimensions");
  require(shots >= 1, ErrorKind::kConfig, "synthetic data needs at least one shot");
  require(std::isfinite(sigma) && sigma >= 0.0, ErrorKind::kConfig, "sigma must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix prototypes(n_classes, dims);
  for (double& v : prototypes.values()) v = normal(rng);
  prototypes = normalize_rows(prototypes);

  const std::size_t total = n_classes * (shots + test_per_class);
  Matrix images(total, dims);
  std::vector<std::size_t> labels(total);
  std::size_t row = 0;
  auto emit = [&](std::size_t count) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (std::size_t k = 0; k < count; ++k, ++row) {
        auto out = images.row(row);
        const auto proto = prototypes.row(c);
        for (std::size_t j = 0; j < dims; ++j) out[j] = proto[j] + sigma * normal(rng);
        labels[row] = c;
      }
    }
  };
  emit(shots);
  emit(test_per_class);

  std::vector<std::string> names(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) names[c] = "class_" + std::to_string(c);

  FewShotDataset ds{EmbeddingMatrix::from_matrix(images, /*normalize=*/true),
                    labels,
                    labels,
                    n_classes,
                    shots,
                    std::move(names)};
  return {std::move(ds), EmbeddingMatrix::from_matrix(prototypes, /*normalize=*/true)};
}

std::size_t corrupted_per_class(double delta, std::size_t shots) {
  return static_cast<std::size_t>(std::floor(delta * static_cast<double>(shots) + 0.5));
}

FewShotDataset inject_noise(const FewShotDataset& ds, const NoiseSpec& spec) {
  require(spec.delta >= 0.0 && spec.delta <= 1.0, ErrorKind::kConfig,
          "noise ratio must lie in [0, 1], got " + std::to_string(spec.delta));
  ds.validate();
  const std::size_t train = ds.train_rows();
  require(std::equal(ds.noisy_labels.begin(),
                     ds.noisy_labels.begin() + static_cast<std::ptrdiff_t>(train),
                     ds.clean_labels.begin()),
          ErrorKind::kConfig, "noise has already been applied to this dataset");

  FewShotDataset out = ds;
  const std::size_t n = ds.n_classes;
  const std::size_t per_class = corrupted_per_class(spec.delta, ds.shots);
  std::mt19937_64 rng(spec.seed);

  std::vector<std::vector<std::size_t>> rows_of(n);
  for (std::size_t i = 0; i < train; ++i) rows_of[ds.clean_labels[i]].push_back(i);

  for (std::size_t c = 0; c < n; ++c) {
    auto& rows = rows_of[c];
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t k = 0; k < per_class; ++k) {
      std::size_t replacement = (c + 1) % n;
      if (spec.kind == NoiseKind::kSymmetric) {
        std::uniform_int_distribution<std::size_t> pick(0, n - 2);
        replacement = pick(rng);
        if (replacement >= c) ++replacement;
      }
      out.noisy_labels[rows[k]] = replacement;
    }
  }
  return out;
}

void save_dataset(const FewShotDataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  save_embeddings(ds.images, dir / DatasetFiles::kImages);
  save_labels(ds.clean_labels, dir / DatasetFiles::kLabels);
  save_class_names(ds.class_names, dir / DatasetFiles::kClassNames);
  if (ds.noisy_labels != ds.clean_labels) {
    save_labels(ds.noisy_labels, dir / DatasetFiles::kNoisyLabels);
  }
}

FewShotDataset load_dataset(const std::filesystem::path& dir, std::size_t shots,
                            const std::filesystem::path& noisy_labels) {
  auto images = load_embeddings(dir / DatasetFiles::kImages);
  auto clean = load_labels(dir / DatasetFiles::kLabels);
  auto names = load_class_names(dir / DatasetFiles::kClassNames);

  std::filesystem::path noisy_path = noisy_labels;
  if (noisy_path.empty() && std::filesystem::exists(dir / DatasetFiles::kNoisyLabels)) {
    noisy_path = dir / DatasetFiles::kNoisyLabels;
  }
  auto noisy = noisy_path.empty() ? clean : load_labels(noisy_path);

  const std::size_t n = names.size();
  FewShotDataset ds{std::move(images), std::move(clean), std::move(noisy), n, shots,
                    std::move(names)};
  ds.validate();
  return ds;
}

}  // namespace crof
