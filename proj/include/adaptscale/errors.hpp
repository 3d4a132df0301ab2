#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adaptscale {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// hamio
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};
class InconsistentSector : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };

// pauli
class EmptyProblem : public Error { using Error::Error; };

// simulator
class ArityError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class OrderingError : public Error { using Error::Error; };
class NumericalError : public Error { using Error::Error; };

// pools
class EmptySubpool : public Error { using Error::Error; };
class CostTableError : public Error { using Error::Error; };

// adapt
class OptimizationStall : public Error { using Error::Error; };

// exact
class SectorTooLarge : public Error { using Error::Error; };
class IterationLimit : public Error { using Error::Error; };

// complexity
class UseLimitVariant : public Error { using Error::Error; };

// analysis
class DegenerateFit : public Error { using Error::Error; };
class UndefinedRSquared : public Error { using Error::Error; };
class NonDecayingFit : public Error { using Error::Error; };
class InsufficientData : public Error { using Error::Error; };

// cli
class ManifestError : public Error { using Error::Error; };

}  // namespace adaptscale
