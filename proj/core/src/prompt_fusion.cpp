#include "crof/prompt_fusion.hpp"

#include <cmath>

#include "crof/error.hpp"

namespace crof {

EmbeddingMatrix fuse(const EmbeddingMatrix& sup, const EmbeddingMatrix& cafo) {
  require(sup.rows() == cafo.rows() && sup.dims() == cafo.dims(), ErrorKind::kShape,
          "cannot fuse " + std::to_string(sup.rows()) + "x" + std::to_string(sup.dims()) +
              " with " + std::to_string(cafo.rows()) + "x" + std::to_string(cafo.dims()));
  Matrix sum(sup.rows(), sup.dims());
  for (std::size_t r = 0; r < sup.rows(); ++r) {
    auto out = sum.row(r);
    const auto a = sup.row(r);
    const auto b = cafo.row(r);
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] = static_cast<double>(a[j]) + static_cast<double>(b[j]);
    }
    const double norm = l2_norm(out);
    if (norm < kFusionMinNorm) {
      fail(ErrorKind::kDegenerate,
           "fused row " + std::to_string(r) + " cancels to zero (norm " + std::to_string(norm) + ")");
    }
  }
  return EmbeddingMatrix::from_matrix(sum, /*normalize=*/true);
}

EmbeddingMatrix average_descriptions(const EmbeddingMatrix& descriptions, std::size_t per_class) {
  require(per_class >= 1, ErrorKind::kConfig, "descriptions per class must be >= 1");
  require(descriptions.rows() % per_class == 0, ErrorKind::kShape,
          std::to_string(descriptions.rows()) + " description rows do not split into groups of " +
              std::to_string(per_class));
  const Matrix unit = normalize_rows(descriptions.to_matrix());
  const std::size_t n = unit.rows() / per_class;
  Matrix mean(n, unit.cols());
  for (std::size_t c = 0; c < n; ++c) {
    auto out = mean.row(c);
    for (std::size_t k = 0; k < per_class; ++k) {
      const auto in = unit.row(c * per_class + k);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += in[j];
    }
    for (double& v : out) v /= static_cast<double>(per_class);
  }
  return EmbeddingMatrix::from_matrix(mean, /*normalize=*/true);
}

Matrix interclass_similarity(const EmbeddingMatrix& e) {
  const Matrix unit = normalize_rows(e.to_matrix());
  const std::size_t n = unit.rows();
  Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double c = dot(unit.row(i), unit.row(j));
      sim(i, j) = c;
      sim(j, i) = c;
    }
  }
  return sim;
}

double mean_offdiagonal(const Matrix& sim) {
  require(sim.rows() == sim.cols(), ErrorKind::kShape, "similarity matrix must be square");
  const std::size_t n = sim.rows();
  require(n >= 2, ErrorKind::kSize, "mean off-diagonal needs at least two classes");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) acc += sim(i, j);
    }
  }
  return acc / static_cast<double>(n * (n - 1));
}

std::string build_prompt_request(std::string_view task_target,
                                 std::span<const std::string> class_names) {
  require(!class_names.empty(), ErrorKind::kConfig, "prompt request needs at least one class");
  std::string list;
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    if (i > 0) list += ", ";
    list += class_names[i];
  }
  std::string text = "I have " + std::to_string(class_names.size()) + " categories of ";
  text += task_target;
  text +=
      ", and each category is described as \"a photo of {category name}.\" "
      "I want to introduce detailed differentiation descriptions, comparative information, "
      "scene backgrounds, emotions, or domain-specific terms in the descriptions to guide "
      "CLIP text encoder to generate more distinguishable category embedding for similar "
      "categories. Please generate five descriptions for each category according to above "
      "principles. My category list is: [";
  text += list;
  text += "]. Output the descriptions in JSON format.";
  return text;
}

}  // namespace crof
