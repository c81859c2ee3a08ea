#pragma once

#include <stdexcept>
#include <string>

namespace lassonet {

/// Violated precondition or API contract (dimension mismatch, bad argument).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical failure at runtime (divergence, iteration cap, NaN loss).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; message carries row/column context.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lassonet
