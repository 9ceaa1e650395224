#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crof {

/// Category of a library failure. Each maps to a distinct CLI exit code.
enum class ErrorKind {
  kStorage = 3,     // I/O failure reading or writing a file
  kFormat = 4,      // malformed file contents (bad magic, unparsable line)
  kLength = 5,      // payload shorter or longer than its header declares
  kValue = 6,       // non-finite or out-of-range numeric value
  kConfig = 7,      // invalid configuration or precondition
  kShape = 8,       // dimension mismatch between operands
  kDegenerate = 9,  // zero-norm vector where a direction is required
  kIndex = 10,      // class or row index out of range
  kSize = 11,       // collection too small for the operation
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const char* message) {
  if (!condition) fail(kind, message);
}

// Prefer `if (!cond) fail(...)` where building `message` is costly and the
// check runs per sample.
inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace crof
