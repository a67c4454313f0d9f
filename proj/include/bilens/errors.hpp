#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bilens {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A shape or value precondition was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An integration produced a non-finite value.
class NumericalBlowUp : public Error {
 public:
  NumericalBlowUp(std::size_t node, double time, const std::string& what)
      : Error(what), node_(node), time_(time) {}
  NumericalBlowUp(std::size_t node, double time)
      : NumericalBlowUp(node, time,
                        "numerical blow-up at node " + std::to_string(node) +
                            " (t=" + std::to_string(time) + ")") {}

  std::size_t node() const { return node_; }
  double time() const { return time_; }

 private:
  std::size_t node_;
  double time_;
};

/// Finite escape of the backward Riccati flow.
class RiccatiEscape : public NumericalBlowUp {
 public:
  RiccatiEscape(std::size_t node, double time, const std::string& what)
      : NumericalBlowUp(node, time, what) {}
};

/// Φ(t_j, t0) could not be inverted.
class TransitionInversionFailure : public Error {
 public:
  explicit TransitionInversionFailure(std::size_t node)
      : Error("transition inversion failure at node " + std::to_string(node)),
        node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

}  // namespace bilens
