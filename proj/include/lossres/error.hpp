#pragma once

#include <stdexcept>
#include <string>

namespace lossres {

// Malformed input data: missing cells, duplicate keys, bad headers.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Non-finite value produced during a numerical procedure.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lossres
