#include <gtest/gtest.h>

#include "crof/error.hpp"
#include "crof/matrix.hpp"
#include "crof/text_format.hpp"

namespace crof {
namespace {

TEST(TextFormat, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(72.5), "72.5");
  EXPECT_EQ(format_number(1.0), "1");
  const double third = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_number(third)), third);
}

TEST(TextFormat, MatrixCsv) {
  EXPECT_EQ(matrix_to_csv(Matrix(2, 2, {1, 0.5, 0.25, 2})), "1,0.5\n0.25,2\n");
}

TEST(TextFormat, KeyValuesSkipCommentsAndBlankLines) {
  const auto kv = parse_key_values("# header\n\nalpha = 0.5\n  name=rose  \n", "test");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("alpha"), "0.5");
  EXPECT_EQ(kv.at("name"), "rose");
  EXPECT_DOUBLE_EQ(kv_double(kv, "alpha"), 0.5);
}

TEST(TextFormat, KeyValuesRejectMalformedLine) {
  try {
    parse_key_values("alpha 0.5\n", "cfg.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
}

TEST(TextFormat, TypedLookupsValidate) {
  const std::map<std::string, std::string> kv{{"n", "12"}, {"x", "abc"}, {"neg", "-3"}};
  EXPECT_EQ(kv_size(kv, "n"), 12u);
  EXPECT_THROW(kv_double(kv, "x"), Error);
  EXPECT_THROW(kv_size(kv, "neg"), Error);
  EXPECT_THROW(kv_size(kv, "missing"), Error);
}

}  // namespace
}  // namespace crof
