#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "crof/matrix.hpp"

namespace crof {

/// Immutable row-major float32 matrix of feature vectors.
///
/// Invariants, checked on construction: rows >= 1, dims >= 2, every value
/// finite, and when `normalized` is set every row has unit L2 norm within
/// kUnitNormTolerance.
class EmbeddingMatrix {
 public:
  static constexpr double kUnitNormTolerance = 1e-6;

  EmbeddingMatrix(std::size_t rows, std::size_t dims, std::vector<float> data,
                  bool normalized = false);

  /// Rounds `m` to float32. With `normalize` set, rows are L2-normalized in
  /// double precision first and the result is flagged normalized.
  static EmbeddingMatrix from_matrix(const Matrix& m, bool normalize = false);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dims() const noexcept { return dims_; }
  bool normalized() const noexcept { return normalized_; }

  std::span<const float> row(std::size_t r) const { return {data_.data() + r * dims_, dims_}; }
  std::span<const float> data() const noexcept { return data_; }

  /// Double-precision copy for computation.
  Matrix to_matrix() const;

  /// Subset of rows, preserving the normalized flag.
  EmbeddingMatrix slice_rows(std::size_t begin, std::size_t end) const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t dims_;
  std::vector<float> data_;
  bool normalized_;
};

// CROFEMB1 layout: 8-byte ASCII magic, u32 LE rows, u32 LE dims, u8 flags
// (bit 0 = normalized), then rows*dims float32 LE values.
inline constexpr std::array<char, 8> kEmbeddingMagic = {'C', 'R', 'O', 'F', 'E', 'M', 'B', '1'};
inline constexpr std::size_t kEmbeddingHeaderBytes = 17;
inline constexpr std::uint8_t kFlagNormalized = 0x01;

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& m);
EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes);

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// Plain text, one decimal class index per line.
void save_labels(std::span<const std::size_t> labels, const std::filesystem::path& path);
std::vector<std::size_t> load_labels(const std::filesystem::path& path);

/// One UTF-8 name per line; line i names class i.
void save_class_names(std::span<const std::string> names, const std::filesystem::path& path);
std::vector<std::string> load_class_names(const std::filesystem::path& path);

/// Whole-file helpers shared by the text writers. Failures raise storage errors.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace crof
