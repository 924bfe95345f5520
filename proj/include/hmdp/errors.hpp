#pragma once

#include <stdexcept>
#include <string>

namespace hmdp {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A model (or an instantiation of one) violates well-definedness:
/// rows that do not sum to one, negative probabilities or rewards.
struct NotWellDefined : Error {
  using Error::Error;
};

/// The almost-sure target reachability precheck failed, or a value
/// iteration diverged; maximal expected rewards are not finite.
struct DivergentReward : Error {
  using Error::Error;
};

/// An interval assignment for the uncertain macro model is malformed
/// (lower above upper, or no stochastic vector fits the row intervals).
struct SuitabilityViolation : Error {
  using Error::Error;
};

/// A candidate region changes the support of some distribution, which
/// would invalidate the vertex argument behind region bounds.
struct GraphChange : Error {
  using Error::Error;
};

/// The refinement bookkeeping lost track of a call state: it is neither
/// individually solved nor covered by a queued binding.
struct CoverageGap : Error {
  using Error::Error;
};

/// A configured size cap (e.g. for flattening) would be exceeded.
struct CapExceeded : Error {
  using Error::Error;
};

/// An iteration budget ran out before the requested precision was met.
struct IterationCapExceeded : Error {
  using Error::Error;
};

/// Syntax or semantic error in a model file, with a 1-based location.
struct ParseError : Error {
  ParseError(std::string message, int line, int column)
      : Error(std::move(message)), line(line), column(column) {}
  int line;
  int column;
};

}  // namespace hmdp
