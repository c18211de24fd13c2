#pragma once

#include <stdexcept>
#include <string>

namespace msc {

// Error kinds surfaced by the library.  The CLI maps these onto exit codes,
// so additions here need a case in tools/msctool.cpp as well.
enum class ErrorKind {
  Syntax,
  UnknownProcess,
  UnknownLabel,
  UnboundVariable,
  NotALinearization,
  NotExistsBBounded,
  MalformedWord,
  UnsupportedFragment,
  LoopNotAllowed,
  NotMinMaxShape,
  IncompatibleAlphabet,
  ResourceLimit,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::string message, int line, int column)
      : Error(ErrorKind::Syntax,
              message + " (line " + std::to_string(line) + ", column " +
                  std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Thrown when a configurable budget (evaluation steps, formula nodes,
// machine states, enumerated runs) is exhausted.  `stage` names the phase
// that gave up.
class ResourceLimitError : public Error {
 public:
  explicit ResourceLimitError(std::string stage)
      : Error(ErrorKind::ResourceLimit, "resource limit exceeded in " + stage),
        stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::UnknownProcess: return "UnknownProcess";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::UnboundVariable: return "UnboundVariable";
    case ErrorKind::NotALinearization: return "NotALinearization";
    case ErrorKind::NotExistsBBounded: return "NotExistsBBounded";
    case ErrorKind::MalformedWord: return "MalformedWord";
    case ErrorKind::UnsupportedFragment: return "UnsupportedFragment";
    case ErrorKind::LoopNotAllowed: return "LoopNotAllowed";
    case ErrorKind::NotMinMaxShape: return "NotMinMaxShape";
    case ErrorKind::IncompatibleAlphabet: return "IncompatibleAlphabet";
    case ErrorKind::ResourceLimit: return "ResourceLimit";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace msc
