#include "crof/error.hpp"

namespace crof {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kStorage: return "storage error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kLength: return "length error";
    case ErrorKind::kValue: return "value error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kDegenerate: return "degenerate error";
    case ErrorKind::kIndex: return "index error";
    case ErrorKind::kSize: return "size error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace crof
