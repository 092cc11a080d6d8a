#pragma once

#include <stdexcept>
#include <string>

namespace bdie {

enum class ErrorKind {
  Config,
  Resource,
  Geometry,
  Partition,
  CoefficientViolation,
  SingularEvaluation,
  Solver,
  TruncationUnsound,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

// Process exit codes used by the command-line front end.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Partition:
    case ErrorKind::Io:
      return 2;
    case ErrorKind::Resource:
      return 3;
    default:
      return 1;
  }
}

}  // namespace bdie
