#pragma once

#include <stdexcept>

namespace minishrink {

// Input that fails to parse at all (malformed JSON, bad number, bad bitstring).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally sound input that violates a model invariant
// (duplicate ids, dangling rule references, non-positive capacities, ...).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The measurement backend itself failed (I/O error, timeout, protocol garbage).
// Distinct from an infeasible build, which is a normal Measurement{feasible=false}.
struct EvaluatorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace minishrink
