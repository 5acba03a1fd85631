#pragma once

#include <stdexcept>
#include <string>

namespace mbar {

/// Input content is malformed or violates a domain constraint (bad CSV line,
/// rating off the scale, non-positive variance where positive is required).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A closed-form quantity is undefined for the given input, e.g. a barrier
/// over variances that are all zero.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace mbar
