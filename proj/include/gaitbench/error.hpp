#pragma once

#include <stdexcept>
#include <string>

namespace gaitbench {

/// Broad failure categories. The CLI maps each to its own exit code.
enum class ErrorKind {
  invalid_argument = 2,
  io = 3,
  invalid_data = 4,
  unsupported = 5,
  numerical = 6,
  incomplete = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace gaitbench
