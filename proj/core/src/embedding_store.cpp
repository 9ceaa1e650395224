#include "crof/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "crof/error.hpp"

namespace crof {
namespace {

void put_u32(std::span<std::uint8_t> out, std::size_t offset, std::uint32_t v) {
  for (std::size_t i = 0; i < 4; ++i) out[offset + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | in[offset + static_cast<std::size_t>(i)];
  return v;
}

std::string path_str(const std::filesystem::path& p) { return p.string(); }

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dims, std::vector<float> data,
                                 bool normalized)
    : rows_(rows), dims_(dims), data_(std::move(data)), normalized_(normalized) {
  require(rows_ >= 1, ErrorKind::kValue, "embedding matrix needs at least one row");
  require(dims_ >= 2, ErrorKind::kValue, "embedding matrix needs at least two dimensions");
  require(data_.size() == rows_ * dims_, ErrorKind::kLength,
          "embedding payload has " + std::to_string(data_.size()) + " values, header declares " +
              std::to_string(rows_ * dims_));
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      fail(ErrorKind::kValue, "non-finite value at row " + std::to_string(i / dims_) +
                                  ", column " + std::to_string(i % dims_));
    }
  }
  if (normalized_) {
    for (std::size_t r = 0; r < rows_; ++r) {
      double sq = 0.0;
      for (float v : row(r)) sq += static_cast<double>(v) * static_cast<double>(v);
      if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) {
        fail(ErrorKind::kValue, "row " + std::to_string(r) +
                                    " is flagged normalized but has norm " +
                                    std::to_string(std::sqrt(sq)));
      }
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::from_matrix(const Matrix& m, bool normalize) {
  const Matrix& src = m;
  Matrix unit;
  if (normalize) unit = normalize_rows(m);
  const Matrix& use = normalize ? unit : src;
  std::vector<float> data(use.size());
  std::ranges::transform(use.values(), data.begin(),
                         [](double v) { return static_cast<float>(v); });
  return EmbeddingMatrix(use.rows(), use.cols(), std::move(data), normalize);
}

Matrix EmbeddingMatrix::to_matrix() const {
  std::vector<double> values(data_.begin(), data_.end());
  return Matrix(rows_, dims_, std::move(values));
}

EmbeddingMatrix EmbeddingMatrix::slice_rows(std::size_t begin, std::size_t end) const {
  require(begin < end && end <= rows_, ErrorKind::kIndex,
          "row slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range");
  std::vector<float> sub(data_.begin() + static_cast<std::ptrdiff_t>(begin * dims_),
                         data_.begin() + static_cast<std::ptrdiff_t>(end * dims_));
  return EmbeddingMatrix(end - begin, dims_, std::move(sub), normalized_);
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& m) {
  std::vector<std::uint8_t> out(kEmbeddingHeaderBytes + m.data().size() * 4);
  std::ranges::copy(kEmbeddingMagic, out.begin());
  put_u32(out, 8, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, 12, static_cast<std::uint32_t>(m.dims()));
  out[16] = m.normalized() ? kFlagNormalized : 0;
  std::size_t offset = kEmbeddingHeaderBytes;
  for (float v : m.data()) {
    put_u32(out, offset, std::bit_cast<std::uint32_t>(v));
    offset += 4;
  }
  return out;
}

EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_len = std::min(bytes.size(), kEmbeddingMagic.size());
  require(std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_len),
                     reinterpret_cast<const std::uint8_t*>(kEmbeddingMagic.data())),
          ErrorKind::kFormat, "bad magic, expected CROFEMB1");
  require(bytes.size() >= kEmbeddingHeaderBytes, ErrorKind::kLength,
          "file is " + std::to_string(bytes.size()) + " bytes, shorter than the header");
  const std::uint32_t rows = get_u32(bytes, 8);
  const std::uint32_t dims = get_u32(bytes, 12);
  const std::uint8_t flags = bytes[16];
  require((flags & ~kFlagNormalized) == 0, ErrorKind::kFormat,
          "unknown flag bits " + std::to_string(flags));

  const std::uint64_t expected = static_cast<std::uint64_t>(rows) * dims * 4;
  const std::uint64_t actual = bytes.size() - kEmbeddingHeaderBytes;
  require(actual == expected, ErrorKind::kLength,
          "header declares " + std::to_string(rows) + "x" + std::to_string(dims) + " (" +
              std::to_string(expected) + " payload bytes) but file has " +
              std::to_string(actual));

  std::vector<float> data(static_cast<std::size_t>(rows) * dims);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, kEmbeddingHeaderBytes + 4 * i));
  }
  return EmbeddingMatrix(rows, dims, std::move(data), (flags & kFlagNormalized) != 0);
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  const auto bytes = encode_embeddings(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kStorage, "cannot open " + path_str(path) + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  require(!out.fail(), ErrorKind::kStorage, "write failed for " + path_str(path));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kStorage, "cannot open " + path_str(path));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  require(!in.bad(), ErrorKind::kStorage, "read failed for " + path_str(path));
  try {
    return decode_embeddings(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path_str(path) + ": " + e.detail());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kStorage, "cannot open " + path_str(path));
  std::ostringstream ss;
  ss << in.rdbuf();
  require(!in.bad(), ErrorKind::kStorage, "read failed for " + path_str(path));
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kStorage, "cannot open " + path_str(path) + " for writing");
  out << text;
  out.close();
  require(!out.fail(), ErrorKind::kStorage, "write failed for " + path_str(path));
}

void save_labels(std::span<const std::size_t> labels, const std::filesystem::path& path) {
  std::string text;
  for (std::size_t label : labels) {
    text += std::to_string(label);
    text += '\n';
  }
  write_text_file(path, text);
}

std::vector<std::size_t> load_labels(const std::filesystem::path& path) {
  const auto lines = split_lines(read_text_file(path));
  std::vector<std::size_t> labels;
  labels.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty() && i + 1 == lines.size()) break;
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
    require(ec == std::errc() && ptr == line.data() + line.size() && !line.empty(),
            ErrorKind::kFormat,
            path_str(path) + ":" + std::to_string(i + 1) + ": not a class index: '" + line + "'");
    labels.push_back(value);
  }
  return labels;
}

void save_class_names(std::span<const std::string> names, const std::filesystem::path& path) {
  std::string text;
  for (const auto& name : names) {
    require(name.find('\n') == std::string::npos, ErrorKind::kValue,
            "class name contains a newline: " + name);
    text += name;
    text += '\n';
  }
  write_text_file(path, text);
}

std::vector<std::string> load_class_names(const std::filesystem::path& path) {
  return split_lines(read_text_file(path));
}

}  // namespace crof
