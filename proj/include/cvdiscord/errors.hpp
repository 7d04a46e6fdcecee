#pragma once

#include <stdexcept>
#include <string>

namespace cvdiscord {

class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string &what) : std::invalid_argument(what) {}
};

// Requested state or operator does not fit in the truncated Fock space.
class TruncationError : public std::runtime_error {
 public:
  explicit TruncationError(const std::string &what) : std::runtime_error(what) {}
};

class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string &what) : std::runtime_error(what) {}
};

class NumericalIntegrityError : public std::runtime_error {
 public:
  explicit NumericalIntegrityError(const std::string &what) : std::runtime_error(what) {}
};

}  // namespace cvdiscord
