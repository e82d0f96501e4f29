#pragma once

#include <stdexcept>
#include <string>

namespace dmaop {

/// Malformed or out-of-contract input (bad polygon, corrupt density, bad config).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A simplex whose vertices are affinely dependent.
class DegenerateSimplexError : public std::runtime_error {
 public:
  DegenerateSimplexError(int simplex, const std::string& what)
      : std::runtime_error(what), simplex_(simplex) {}
  int simplex() const { return simplex_; }

 private:
  int simplex_;
};

/// Evaluation outside the domain of a penalty, e.g. -log det H with det H <= 0.
class DomainError : public std::domain_error {
 public:
  DomainError(int simplex, const std::string& what) : std::domain_error(what), simplex_(simplex) {}
  int simplex() const { return simplex_; }

 private:
  int simplex_;
};

}  // namespace dmaop
