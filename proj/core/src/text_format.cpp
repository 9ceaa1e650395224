#include "crof/text_format.hpp"

#include <charconv>
#include <cstdlib>

#include <fmt/format.h>

#include "crof/error.hpp"

namespace crof {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

const std::string& kv_get(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  require(it != kv.end(), ErrorKind::kFormat, "missing key '" + key + "'");
  return it->second;
}

}  // namespace

std::string format_number(double value) { return fmt::format("{}", value); }

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_number(m(r, c));
    }
    out += '\n';
  }
  return out;
}

std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                    std::string_view source) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::kFormat, std::string(source) + ":" + std::to_string(line_no) +
                                   ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    require(!key.empty(), ErrorKind::kFormat,
            std::string(source) + ":" + std::to_string(line_no) + ": empty key");
    out[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  const std::string& text = kv_get(kv, key);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  require(!text.empty() && end == text.c_str() + text.size(), ErrorKind::kFormat,
          "key '" + key + "' is not a number: '" + text + "'");
  return v;
}

std::size_t kv_size(const std::map<std::string, std::string>& kv, const std::string& key) {
  const std::string& text = kv_get(kv, key);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorKind::kFormat,
          "key '" + key + "' is not a count: '" + text + "'");
  return v;
}

}  // namespace crof
