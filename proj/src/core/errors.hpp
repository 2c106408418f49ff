#pragma once

#include <stdexcept>
#include <string>

namespace gp {

// Error categories mirror the process exit codes used by the CLI:
// usage 2, input validation 3, numeric failure 4, I/O failure 5.
enum class ErrorKind { usage = 2, validation = 3, numeric = 4, io = 5 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_usage(const std::string& msg) {
  throw Error(ErrorKind::usage, msg);
}
[[noreturn]] inline void fail_validation(const std::string& msg) {
  throw Error(ErrorKind::validation, msg);
}
[[noreturn]] inline void fail_numeric(const std::string& msg) {
  throw Error(ErrorKind::numeric, msg);
}
[[noreturn]] inline void fail_io(const std::string& msg) {
  throw Error(ErrorKind::io, msg);
}

}  // namespace gp
