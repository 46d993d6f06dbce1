#pragma once

#include <stdexcept>
#include <string>

namespace hcdep {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Higher criticism requested with kappa >= 1, where the effective sample
/// size collapses to a single block.
class DegenerateRegimeError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// No candidate level of an HC grid falls inside [-t_n, t_n].
class EmptyGridError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Memory or runtime cap exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical invariant that should hold by construction was violated.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hcdep
