#pragma once

#include <stdexcept>
#include <string>

namespace qcest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions, bad indices, malformed permutations.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A configured size cap would be exceeded.
class CapExceeded : public Error {
public:
  using Error::Error;
};

/// A value violates a type invariant (normalization, hermiticity, POVM sum).
class InvariantError : public Error {
public:
  using Error::Error;
};

/// File content does not match the expected schema.
class SchemaError : public Error {
public:
  using Error::Error;
};

/// Unknown builtin name or out-of-range builtin parameter.
class UsageError : public Error {
public:
  using Error::Error;
};

} // namespace qcest
