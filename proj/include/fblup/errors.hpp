#pragma once

#include <stdexcept>
#include <string>

namespace fblup {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite or otherwise malformed input.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Operands live in different ambient spaces.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Collocation residual of the bracket fit exceeds tolerance: the generator
/// family is not closed under brackets at the requested ansatz degree.
class NotBracketClosed : public Error {
 public:
  using Error::Error;
};

/// Every sampled approach ray consists of non-regular points.
class NoRegularApproach : public Error {
 public:
  using Error::Error;
};

/// Source/target mismatch in a groupoid composition.
class NotComposable : public Error {
 public:
  using Error::Error;
};

/// A conjugated algebra element could not be re-expressed in the basis.
class NotInAlgebra : public Error {
 public:
  using Error::Error;
};

/// The fiber class of a kernel direction could not be resolved by collocation.
class ClassUnresolved : public Error {
 public:
  using Error::Error;
};

/// The leaf distribution changed rank along a trace.
class RankDrop : public Error {
 public:
  using Error::Error;
};

/// The ODE flow left the configured safety region.
class FlowEscape : public Error {
 public:
  using Error::Error;
};

/// Three-valued answer for semi-decidable questions (coset membership and
/// friends). Tests must budget for Inconclusive.
enum class Decision { Yes, No, Inconclusive };

inline const char* to_string(Decision d) {
  switch (d) {
    case Decision::Yes: return "yes";
    case Decision::No: return "no";
    default: return "inconclusive";
  }
}

}  // namespace fblup
