#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "crof/embedding_store.hpp"
#include "crof/matrix.hpp"

namespace crof {

/// Row norms of sup_i + cafo_i below this are treated as cancellation.
inline constexpr double kFusionMinNorm = 1e-12;

/// Row-wise fusion of supplement-description and baseline-description text
/// embeddings: row i = (sup_i + cafo_i) / ||sup_i + cafo_i||.
EmbeddingMatrix fuse(const EmbeddingMatrix& sup, const EmbeddingMatrix& cafo);

/// Collapses `per_class` consecutive description embeddings per class into
/// one row: each description is normalized, the group is averaged, and the
/// mean is normalized again.
EmbeddingMatrix average_descriptions(const EmbeddingMatrix& descriptions, std::size_t per_class);

/// n x n cosine similarity between class embeddings. Exactly symmetric.
Matrix interclass_similarity(const EmbeddingMatrix& e);

/// Mean of the off-diagonal entries of a square similarity matrix.
double mean_offdiagonal(const Matrix& sim);

/// Request text asking a chat model for five differentiating descriptions
/// per class, with the class count, task target and class list substituted.
std::string build_prompt_request(std::string_view task_target,
                                 std::span<const std::string> class_names);

}  // namespace crof
