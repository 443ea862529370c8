#pragma once

#include <stdexcept>
#include <string>

namespace fmmbem {

/// Malformed or unreadable input (files, flags, parameters).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometry that the discretization cannot handle: degenerate panels,
/// coincident points, charges sitting on collocation points.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arithmetic breakdown that is not a property of the input file.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fmmbem
