#pragma once

#include <stdexcept>
#include <string>

namespace emucal {

/// Broad failure class; the CLI maps it onto an exit code.
enum class ErrorCategory { Validation, Runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define EMUCAL_DEFINE_ERROR(Name, Category)                                     \
  class Name : public Error {                                                  \
   public:                                                                     \
    explicit Name(const std::string& what)                                     \
        : Error(ErrorCategory::Category, std::string(#Name ": ") + what) {}    \
  };

EMUCAL_DEFINE_ERROR(DomainError, Validation)
EMUCAL_DEFINE_ERROR(DimensionMismatch, Validation)
EMUCAL_DEFINE_ERROR(InvalidTheta, Validation)
EMUCAL_DEFINE_ERROR(ParseError, Validation)
EMUCAL_DEFINE_ERROR(InvariantViolation, Validation)
EMUCAL_DEFINE_ERROR(ConfigError, Validation)
EMUCAL_DEFINE_ERROR(InfeasibleTurbulence, Validation)
EMUCAL_DEFINE_ERROR(NonPositiveSigma, Validation)
EMUCAL_DEFINE_ERROR(DegenerateInterval, Validation)
EMUCAL_DEFINE_ERROR(EmptySubset, Validation)
EMUCAL_DEFINE_ERROR(EmptyBlock, Validation)
EMUCAL_DEFINE_ERROR(AllZero, Validation)
EMUCAL_DEFINE_ERROR(TooFewSamples, Validation)
EMUCAL_DEFINE_ERROR(DesignInfeasible, Runtime)
EMUCAL_DEFINE_ERROR(ConvergenceFailure, Runtime)
EMUCAL_DEFINE_ERROR(RankDeficient, Runtime)
EMUCAL_DEFINE_ERROR(ArtifactMismatch, Runtime)
EMUCAL_DEFINE_ERROR(IoError, Runtime)

#undef EMUCAL_DEFINE_ERROR

}  // namespace emucal
