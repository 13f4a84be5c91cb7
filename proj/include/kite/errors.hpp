#pragma once

#include <stdexcept>
#include <string>

namespace kite {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
  using Error::Error;
};
struct NotPSD : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct IllConditioned : Error {
  using Error::Error;
};
struct Diverged : Error {
  using Error::Error;
};

// Thrown when a property harness (data processing, submodularity, MM
// monotonicity, ...) observes a violation beyond its slack. The message
// starts with the property name so the CLI can list it.
struct PropertyViolation : Error {
  using Error::Error;
};

}  // namespace kite
