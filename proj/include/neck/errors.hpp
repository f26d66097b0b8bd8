#pragma once

#include <stdexcept>
#include <string>

namespace neck {

// Point outside the neck chart or otherwise outside an operation's domain.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Requested derivative order exceeds what the profile supports.
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller supplied invalid data (bad samples, bad profile, bad grid).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Internal invariant of a construction was violated; indicates a bug.
struct ConstructionError : std::logic_error {
  using std::logic_error::logic_error;
};

// Adaptive quadrature failed to converge.
struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid run configuration (CLI / JSON).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace neck
