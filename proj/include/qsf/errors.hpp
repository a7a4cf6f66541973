#pragma once

#include <stdexcept>
#include <string>

namespace qsf {

/// Input outside an operation's domain (bad parameter, malformed file, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to produce a usable result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DomainError(msg);
}

}  // namespace qsf
