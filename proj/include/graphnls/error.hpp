#pragma once

#include <stdexcept>
#include <string>

namespace graphnls {

// Base class for every error raised by the toolkit. The message always names
// the offending element so CLI diagnostics can be surfaced unchanged.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class GraphError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace graphnls
