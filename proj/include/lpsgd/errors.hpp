#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lpsgd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite input to a quantizer, or a malformed format descriptor.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A norm ratio or projection against a zero reference vector.
class UndefinedRatio : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Requested eigenvalue range cannot be realised in the requested dimension.
class InfeasibleSpectrum : public Error {
 public:
  using Error::Error;
};

/// Inputs fall outside the hypotheses of the bound being evaluated.
class InvalidHypothesis : public Error {
 public:
  using Error::Error;
};

/// Moment constants requested for a model whose constants have no closed form.
class ConstantsNotDerivable : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An iterate became non-finite. `last_finite_k` is the last iteration whose
/// optimality gap was finite (0 if the starting point itself was not).
class Divergence : public Error {
 public:
  Divergence(const std::string& what, std::int64_t last_finite_k)
      : Error(what), last_finite_k_(last_finite_k) {}

  std::int64_t last_finite_k() const noexcept { return last_finite_k_; }

 private:
  std::int64_t last_finite_k_;
};

}  // namespace lpsgd
