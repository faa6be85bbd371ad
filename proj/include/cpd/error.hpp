#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cpd {

enum class Errc {
  OutOfDomain,
  SignatureError,
  DegenerateMetric,
  ZeroSpatialPart,
  NotNull,
  EmptySample,
  ImmediateExit,
  OutOfInterval,
  SingularTransform,
  CriticalPoint,
  PointOffArc,
  InvalidChain,
  ParseError,
  UnsupportedDimension,
  UnknownScenario,
  InvalidArgument,
  IoError,
};

const char* to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Raised by the coefficient expression parser; carries the byte offset of the
// offending token and the token classes that would have been accepted there.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, std::vector<std::string> expected, const std::string& detail);

  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

}  // namespace cpd
