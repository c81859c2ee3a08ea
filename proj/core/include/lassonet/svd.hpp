#pragma once

#include "lassonet/numeric.hpp"

namespace lassonet {

struct SvdResult {
  Matrix u;   // rows x r, orthonormal columns
  Vector s;   // r singular values, descending, non-negative
  Matrix vt;  // r x cols, orthonormal rows
};

/// Thin SVD (r = min(rows, cols)) by one-sided Jacobi rotations.
/// Throws NumericalError if the sweep cap (100 * min(rows, cols)) is hit.
SvdResult svd_thin(const Matrix& a);

}  // namespace lassonet
