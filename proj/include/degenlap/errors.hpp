#pragma once

#include <stdexcept>
#include <string>

namespace degenlap {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Power weight with negative exponent evaluated at the origin.
class SingularPointError : public Error {
public:
  using Error::Error;
};

class OutOfTableError : public Error {
public:
  using Error::Error;
};

/// The dual weight w^{1/(1-p)} is not locally integrable.
class NonIntegrableDualError : public Error {
public:
  using Error::Error;
};

class CoincidentPointsError : public Error {
public:
  using Error::Error;
};

class QueryOutsideDomainError : public Error {
public:
  using Error::Error;
};

class InsufficientResolutionError : public Error {
public:
  using Error::Error;
};

class DegenerateCutoffError : public Error {
public:
  using Error::Error;
};

class NonFiniteEnergyError : public Error {
public:
  using Error::Error;
};

} // namespace degenlap
