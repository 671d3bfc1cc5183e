#pragma once

#include <stdexcept>
#include <string>

namespace dqaem {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class SingularCovarianceError : public Error {
 public:
  using Error::Error;
};

class InvalidWeightError : public Error {
 public:
  using Error::Error;
};

class InvalidOrderError : public Error {
 public:
  using Error::Error;
};

class AsymmetryError : public Error {
 public:
  using Error::Error;
};

/// Overflow or non-finite values in the exponential weight.
class NumericalRangeError : public Error {
 public:
  using Error::Error;
};

/// Every benchmark trial failed, so there is nothing to report.
class EmptyReportError : public Error {
 public:
  using Error::Error;
};

/// A mixture component received (almost) no responsibility mass.
class EmptyComponentError : public Error {
 public:
  EmptyComponentError(int component, double mass)
      : Error("component " + std::to_string(component) +
              " received responsibility mass " + std::to_string(mass)),
        component_(component),
        mass_(mass) {}

  int component() const { return component_; }
  double mass() const { return mass_; }

 private:
  int component_;
  double mass_;
};

}  // namespace dqaem
