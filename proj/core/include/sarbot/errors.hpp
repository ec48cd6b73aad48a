#pragma once

#include <stdexcept>
#include <string>

namespace sarbot {

// Invalid or inconsistent configuration (dimensions, parameters, config files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-finite value showed up where a finite one is required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was invoked out of order (e.g. backprop before forward).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A sensor or camera sample left the canvas.
class OutOfBoundsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sarbot
