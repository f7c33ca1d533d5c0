#pragma once

#include <Eigen/Core>

namespace dtml {

// Dense column-major 64-bit real matrix. Columns are samples everywhere in
// this library; file loaders transpose from the row-per-sample disk layout.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thin SVD factors: a = u * s.asDiagonal() * vt, with s non-negative and
// sorted non-increasing.
struct SvdFactors {
  Matrix u;
  Vector s;
  Matrix vt;
};

}  // namespace dtml
