#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace setexp {

enum class ErrorKind {
  Io,
  EmptyCorpus,
  Parse,
  InvalidTree,
  UnknownTerm,
  EmptyNormalization,
  Config,
  InsufficientData,
  Divergence,
  MissingTerm,
  Format,
  DegenerateLabels,
  Shape,
  NoSignal,
  UndefinedMetric,
  Conflict,
  NotFound,
};

std::string_view to_string(ErrorKind kind);

// Every failure the library reports carries one of the kinds above so that the
// service layer can map it onto a status code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace setexp
