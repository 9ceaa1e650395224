#pragma once

#include <map>
#include <string>
#include <string_view>

#include "crof/matrix.hpp"

namespace crof {

/// Shortest decimal that parses back to the same double.
std::string format_number(double value);

/// Row-major CSV, no header, full-precision decimals.
std::string matrix_to_csv(const Matrix& m);

/// Parses `key = value` lines. Blank lines and lines starting with '#' are
/// skipped; anything else without '=' is a format error naming `source`.
/// Later duplicates override earlier ones.
std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                    std::string_view source);

/// Numeric accessors over a parsed key/value map; missing or unparsable
/// entries raise format errors.
double kv_double(const std::map<std::string, std::string>& kv, const std::string& key);
std::size_t kv_size(const std::map<std::string, std::string>& kv, const std::string& key);

}  // namespace crof
