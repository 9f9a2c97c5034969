#pragma once

#include <stdexcept>
#include <string>

namespace percolab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by a caller-supplied argument.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class SizeOverflow : public Error {
 public:
  using Error::Error;
};

// Exact enumeration requested on a box with more bonds than the cap allows.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

// An exact polynomial identity did not hold.
class IdentityViolation : public Error {
 public:
  IdentityViolation(const std::string& identity, std::size_t coefficient, const std::string& detail)
      : Error(identity + ": first differing coefficient at p^" + std::to_string(coefficient) +
              " (" + detail + ")"),
        identity_(identity),
        coefficient_(coefficient) {}

  [[nodiscard]] const std::string& identity() const noexcept { return identity_; }
  [[nodiscard]] std::size_t coefficient() const noexcept { return coefficient_; }

 private:
  std::string identity_;
  std::size_t coefficient_;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

// Internal bookkeeping check failed; indicates a bug rather than bad input.
class SelfCheckViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace percolab
