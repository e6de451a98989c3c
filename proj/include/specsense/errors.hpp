#pragma once

#include <stdexcept>
#include <string>

namespace specsense {

// Precondition violations on public operations.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when H0 calibration statistics carry no spread to place a threshold in.
class DegenerateCalibration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature that failed to meet its tolerance, or produced an out-of-range probability.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

namespace detail {

inline void require(bool ok, const char* message) {
  if (!ok) throw InvalidArgument(message);
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace specsense
