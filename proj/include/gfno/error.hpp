#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gfno {

/// Incompatible tensor extents or ranks. The message names every shape involved.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value produced by a numerical operation was NaN or infinite.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::string op, const std::string& detail)
      : std::runtime_error("non-finite value produced by '" + op + "'" +
                           (detail.empty() ? "" : ": " + detail)),
        op_(std::move(op)) {}

  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

}  // namespace gfno
