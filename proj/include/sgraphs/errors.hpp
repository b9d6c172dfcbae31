#pragma once

#include <stdexcept>
#include <string>

namespace sgraphs {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Plane vector too short to define a normal (plane through the sensor origin).
class DegeneratePlane : public Error {
public:
  using Error::Error;
};

class EmptyCloud : public Error {
public:
  using Error::Error;
};

class TooFewPoints : public Error {
public:
  using Error::Error;
};

class NoConvergence : public Error {
public:
  using Error::Error;
};

class InvalidLayout : public Error {
public:
  using Error::Error;
};

class TooFewPoses : public Error {
public:
  using Error::Error;
};

class EmptyMap : public Error {
public:
  using Error::Error;
};

class FormatError : public Error {
public:
  using Error::Error;
};

/// Normal equations are rank deficient beyond the fixed gauge.
class SingularSystem : public Error {
public:
  SingularSystem(int null_space_dim, const std::string& what)
    : Error(what + " (null-space dimension " + std::to_string(null_space_dim) + ")"),
      null_space_dim_(null_space_dim) {}

  int null_space_dim() const { return null_space_dim_; }

private:
  int null_space_dim_;
};

}  // namespace sgraphs
