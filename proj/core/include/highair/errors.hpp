#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace highair {

// Bad configuration, CLI input or contradictory options.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed, missing or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or other numerical breakdown during training/inference.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape mismatch inside an op.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using WarningSink = std::function<void(const std::string&)>;

// Warnings go to stderr unless a sink is installed. Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace highair
