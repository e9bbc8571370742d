#pragma once

#include <stdexcept>
#include <string>

namespace bayesw {

/// Broad failure classes; each maps to one CLI exit code.
enum class ErrorKind : int {
  kValidation = 2,
  kNumerical = 3,
  kIo = 4,
};

/// Base of every library exception. `code()` is a stable machine-readable tag.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& what)
      : std::runtime_error(what), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

#define BAYESW_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(Kind, #Name, what) {}  \
  };

// linalg
BAYESW_DEFINE_ERROR(SingularMatrix, ErrorKind::kNumerical)
BAYESW_DEFINE_ERROR(NonPositiveDeterminant, ErrorKind::kNumerical)
// model
BAYESW_DEFINE_ERROR(RankDeficient, ErrorKind::kValidation)
BAYESW_DEFINE_ERROR(InconsistentState, ErrorKind::kNumerical)
// priors
BAYESW_DEFINE_ERROR(InvalidAnchor, ErrorKind::kValidation)
BAYESW_DEFINE_ERROR(OutOfSupport, ErrorKind::kValidation)
// sampler
BAYESW_DEFINE_ERROR(NumericalFailure, ErrorKind::kNumerical)
BAYESW_DEFINE_ERROR(DegeneratePosterior, ErrorKind::kNumerical)
// metrics
BAYESW_DEFINE_ERROR(DimensionMismatch, ErrorKind::kValidation)
BAYESW_DEFINE_ERROR(EmptyChain, ErrorKind::kValidation)
BAYESW_DEFINE_ERROR(TooFewDraws, ErrorKind::kValidation)
// io
BAYESW_DEFINE_ERROR(UnbalancedPanel, ErrorKind::kValidation)
BAYESW_DEFINE_ERROR(MissingLag, ErrorKind::kValidation)
BAYESW_DEFINE_ERROR(ParseError, ErrorKind::kValidation)
BAYESW_DEFINE_ERROR(IoError, ErrorKind::kIo)
// configuration
BAYESW_DEFINE_ERROR(ValidationError, ErrorKind::kValidation)

#undef BAYESW_DEFINE_ERROR

}  // namespace bayesw
