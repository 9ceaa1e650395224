#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <random>

#include "crof/embedding_store.hpp"
#include "crof/error.hpp"
#include "oracle.hpp"

namespace crof {
namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected crof::Error";
  return ErrorKind::kStorage;
}

TEST(EmbeddingStore, SmallMatrixLayout) {
  const EmbeddingMatrix m(2, 3, {1, 0, 0, 0, 1, 0}, true);
  const auto bytes = encode_embeddings(m);
  ASSERT_EQ(bytes.size(), kEmbeddingHeaderBytes + 24);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "CROFEMB1");
  EXPECT_EQ(bytes[8], 2);   // rows, little endian
  EXPECT_EQ(bytes[12], 3);  // dims
  EXPECT_EQ(bytes[16], kFlagNormalized);
  EXPECT_EQ(decode_embeddings(bytes), m);
}

TEST(EmbeddingStore, LargeRandomRoundTripIsExact) {
  oracle::TempDir tmp("emb");
  std::mt19937_64 rng(1);
  std::normal_distribution<float> normal;
  std::vector<float> data(100 * 512);
  for (float& v : data) v = normal(rng);
  const EmbeddingMatrix m(100, 512, data);
  save_embeddings(m, tmp / "m.emb");
  const EmbeddingMatrix back = load_embeddings(tmp / "m.emb");
  float max_diff = 0.0f;
  for (std::size_t i = 0; i < data.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(back.data()[i] - data[i]));
  }
  EXPECT_EQ(max_diff, 0.0f);
  EXPECT_FALSE(back.normalized());
}

TEST(EmbeddingStore, RejectsZeroRowsAndTooFewDims) {
  EXPECT_EQ(kind_of([] { EmbeddingMatrix(0, 3, {}); }), ErrorKind::kValue);
  EXPECT_EQ(kind_of([] { EmbeddingMatrix(2, 1, {1, 1}); }), ErrorKind::kValue);
  EXPECT_EQ(kind_of([] { EmbeddingMatrix(2, 2, {1, 1, 1}); }), ErrorKind::kLength);
}

TEST(EmbeddingStore, RejectsNonFiniteAndUnnormalizedRows) {
  EXPECT_EQ(kind_of([] { EmbeddingMatrix(1, 2, {NAN, 0}); }), ErrorKind::kValue);
  EXPECT_EQ(kind_of([] { EmbeddingMatrix(1, 2, {1, 1}, true); }), ErrorKind::kValue);
}

TEST(EmbeddingStore, DecodeErrors) {
  const auto good = encode_embeddings(EmbeddingMatrix(2, 2, {1, 2, 3, 4}));

  auto bad_magic = good;
  std::fill(bad_magic.begin(), bad_magic.begin() + 8, 'X');
  EXPECT_EQ(kind_of([&] { decode_embeddings(bad_magic); }), ErrorKind::kFormat);

  const std::vector<std::uint8_t> short_header(good.begin(), good.begin() + 10);
  EXPECT_EQ(kind_of([&] { decode_embeddings(short_header); }), ErrorKind::kLength);

  const std::vector<std::uint8_t> truncated(good.begin(), good.end() - 4);
  EXPECT_EQ(kind_of([&] { decode_embeddings(truncated); }), ErrorKind::kLength);

  auto flags = good;
  flags[16] = 0x80;
  EXPECT_EQ(kind_of([&] { decode_embeddings(flags); }), ErrorKind::kFormat);

  auto nan = good;
  const float q = NAN;
  std::memcpy(nan.data() + kEmbeddingHeaderBytes, &q, sizeof q);
  EXPECT_EQ(kind_of([&] { decode_embeddings(nan); }), ErrorKind::kValue);
}

TEST(EmbeddingStore, FromMatrixNormalizes) {
  const auto m = EmbeddingMatrix::from_matrix(Matrix(1, 2, {3, 4}), true);
  EXPECT_TRUE(m.normalized());
  EXPECT_FLOAT_EQ(m.row(0)[0], 0.6f);
  EXPECT_FLOAT_EQ(m.row(0)[1], 0.8f);
}

TEST(EmbeddingStore, SliceRows) {
  const EmbeddingMatrix m(3, 2, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m.slice_rows(1, 3), EmbeddingMatrix(2, 2, {3, 4, 5, 6}));
}

TEST(EmbeddingStore, MissingFileIsStorageError) {
  EXPECT_EQ(kind_of([] { load_embeddings("/nonexistent/dir/x.emb"); }), ErrorKind::kStorage);
}

TEST(EmbeddingStore, LabelsAndNames) {
  oracle::TempDir tmp("labels");
  const std::vector<std::size_t> labels{0, 3, 1};
  save_labels(labels, tmp / "l.txt");
  EXPECT_EQ(load_labels(tmp / "l.txt"), labels);

  const std::vector<std::string> names{"rose", "sun flower"};
  save_class_names(names, tmp / "c.txt");
  EXPECT_EQ(load_class_names(tmp / "c.txt"), names);

  write_text_file(tmp / "bad.txt", "1\nx\n");
  EXPECT_EQ(kind_of([&] { load_labels(tmp / "bad.txt"); }), ErrorKind::kFormat);
}

}  // namespace
}  // namespace crof
