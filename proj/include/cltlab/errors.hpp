#pragma once

#include <stdexcept>
#include <string>

namespace cltlab {

// Base of every error raised by the library. `kind()` is a short stable tag
// used by the CLI for machine-parseable diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Resource / certification failures (CLI exit code 3).
class ResourceError : public Error {
  using Error::Error;
};

class PrecisionExhausted : public ResourceError {
 public:
  explicit PrecisionExhausted(const std::string& what)
      : ResourceError("PrecisionExhausted", what) {}
};

class SupportOverflow : public ResourceError {
 public:
  explicit SupportOverflow(const std::string& what) : ResourceError("SupportOverflow", what) {}
};

class QuadratureFailure : public ResourceError {
 public:
  explicit QuadratureFailure(const std::string& what)
      : ResourceError("QuadratureFailure", what) {}
};

// Violated preconditions and malformed input (CLI exit code 2).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("DomainError", what) {}
  DomainError(std::string kind, const std::string& what) : Error(std::move(kind), what) {}
};

#define CLTLAB_DOMAIN_ERROR(Name)                                      \
  class Name : public DomainError {                                    \
   public:                                                             \
    explicit Name(const std::string& what) : DomainError(#Name, what) {} \
  }

CLTLAB_DOMAIN_ERROR(ParseError);
CLTLAB_DOMAIN_ERROR(IndexOutOfRange);
CLTLAB_DOMAIN_ERROR(WeightSumViolation);
CLTLAB_DOMAIN_ERROR(DegenerateScale);
CLTLAB_DOMAIN_ERROR(MomentMismatch);
CLTLAB_DOMAIN_ERROR(InadmissibleT);
CLTLAB_DOMAIN_ERROR(InsufficientPeaks);
CLTLAB_DOMAIN_ERROR(TooFewPoints);

#undef CLTLAB_DOMAIN_ERROR

}  // namespace cltlab
