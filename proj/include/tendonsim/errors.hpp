#pragma once

#include <stdexcept>
#include <string>

namespace tendonsim {

// Invalid or non-finite input to a model function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// c1 + g1(q) vanished: the bending input direction is lost.
class SingularConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SaturationViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Newton-type iteration that did not reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what + " (residual " + std::to_string(residual) +
                           " after " + std::to_string(iterations) + " iterations)"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace tendonsim
