#pragma once

#include "dtml/matrix.hpp"

namespace dtml {

// Minimal-nuclear-norm solution P of the consistent system P*X = X*Z, used to
// carry unseen samples into principal-feature space as P*x.
struct ProjectionMatrix {
  Matrix p;  // m x m
  double fit_residual = 0.0;  // ||P*X - XZ||_F / max(||XZ||_F, 1)
};

// Closed form P = (XZ) * pinv(X). The system P*X = XZ is consistent exactly
// when the columns of XZ lie in the column space of X — automatic when X has
// full column rank, and otherwise a property of the decomposition that
// produced Z (a LatLRR fit satisfies it to within its own feasibility
// residual whenever the sparse part is negligible). For consistent systems
// this closed form is the minimal-nuclear-norm solution; an inconsistent
// input (fit_residual > 1e-6) is rejected with the residual in the error
// message. rank_tol is forwarded to pseudo_inverse; negative means the
// default.
ProjectionMatrix fit_projection(const Matrix& x, const Matrix& xz,
                                double rank_tol = -1.0);

// P * samples.
Matrix project(const ProjectionMatrix& pm, const Matrix& samples);

}  // namespace dtml
