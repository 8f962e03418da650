#pragma once

#include <stdexcept>
#include <string>

namespace rqhj {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a potential, grid, or physics setup.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A channel function u(x) vanishes (or nearly so) inside the integration domain.
class SingularCoefficient : public Error {
 public:
  SingularCoefficient(const std::string& channel_name, double x)
      : Error(channel_name + " singular at x = " + std::to_string(x)),
        channel_(channel_name),
        x_(x) {}

  const std::string& channel() const noexcept { return channel_; }
  double x() const noexcept { return x_; }

 private:
  std::string channel_;
  double x_;
};

class StiffnessFailure : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateMix : public Error {
 public:
  using Error::Error;
};

class CommonZero : public Error {
 public:
  using Error::Error;
};

class ChannelMismatch : public Error {
 public:
  using Error::Error;
};

class VanishingFirstDerivative : public Error {
 public:
  using Error::Error;
};

class SingularMomentum : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent scenario configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rqhj
