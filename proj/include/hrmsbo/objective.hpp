#pragma once

#include "hrmsbo/types.hpp"

#include <cstdint>
#include <stdexcept>

namespace hrmsbo {

/// An evaluation attempt failed (solver crash, timeout, ...). The optimizer
/// retries once and then records the point as missing; it never aborts a run
/// over evaluation errors.
struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A stochastic objective to minimize. Implementations must be deterministic
/// in (x, substream_key): the key routes all evaluation randomness, which
/// keeps optimization runs reproducible regardless of scheduling. Passing an
/// out-of-bounds or non-finite x is a caller bug and throws
/// std::invalid_argument.
class ObjectiveHandle {
 public:
  virtual ~ObjectiveHandle() = default;

  virtual int dim() const = 0;
  virtual const Bounds& bounds() const = 0;
  virtual double evaluate(const Vec& x, std::uint64_t substream_key) = 0;
};

}  // namespace hrmsbo
