#pragma once

#include <stdexcept>
#include <string>

namespace rdskit {

/// Malformed or out-of-contract input: bad ids, unknown attributes, schema
/// violations in CSV/JSON files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An estimator is mathematically undefined on the data it was given (no
/// cross-group recruitments, boundary proportions, ...). Callers may fall
/// back to another estimator or record the replicate as failed.
class EstimatorUndefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace rdskit
