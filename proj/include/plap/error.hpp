#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace plap {

/// Input violates a documented invariant (domain spec, config, sizes).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A call was made outside the operation's precondition (e.g. H <= 0 for HK).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Mesh generation could not meet the quality contract.
class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& what, double achieved_min_angle_deg)
      : std::runtime_error(what), achieved_min_angle_deg_(achieved_min_angle_deg) {}

  double achieved_min_angle_deg() const { return achieved_min_angle_deg_; }

 private:
  double achieved_min_angle_deg_;
};

/// NaN/Inf during assembly.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, int element)
      : std::runtime_error(what), element_(element) {}

  int element() const { return element_; }

 private:
  int element_;
};

/// Newton (or line search) failed; carries the residual history of the failing ladder step.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double epsilon, std::vector<double> history)
      : std::runtime_error(what), epsilon_(epsilon), history_(std::move(history)) {}

  double epsilon() const { return epsilon_; }
  const std::vector<double>& residual_history() const { return history_; }

 private:
  double epsilon_;
  std::vector<double> history_;
};

}  // namespace plap
