#pragma once

#include <vector>

#include "dtml/matrix.hpp"

namespace dtml {

// Augmented-Lagrangian solver knobs shared by latlrr_fit and lrr_fit.
struct SolverOptions {
  double tol = 1e-6;    // relative constraint residual
  int max_iter = 500;
  double mu0 = 1e-2;    // initial penalty
  double rho = 1.1;     // penalty growth per iteration
  double mu_max = 1e10;
};

struct IterationRecord {
  int iteration;               // 1-based
  double constraint_residual;  // max residual / max(||X||_F, 1)
  double mu;
};

// Decomposition X = X*Z + L*X + E with nuclear-norm penalties on Z, L and an
// l1 penalty on E. X*Z collects the inter-sample (principal) part, L*X the
// per-sample (salient) part, E the sparse residual.
struct LatLrrModel {
  Matrix z;  // n x n
  Matrix l;  // m x m
  Matrix e;  // m x n
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<IterationRecord> history;
  bool converged = false;

  int iterations() const { return static_cast<int>(history.size()); }
  double final_residual() const {
    return history.empty() ? 0.0 : history.back().constraint_residual;
  }
};

// Minimize ||Z||_* + lambda1*||L||_* + lambda2*||E||_1 subject to
// X = X*Z + L*X + E, by inexact ALM with splitting variables for Z and L.
// A model that ran out of iterations is returned with converged = false
// rather than thrown; the caller decides.
LatLrrModel latlrr_fit(const Matrix& x, double lambda1, double lambda2,
                       const SolverOptions& opts = {});

struct LrrResult {
  Matrix z;  // d-columns x n
  Matrix e;  // m x n
  std::vector<IterationRecord> history;
  bool converged = false;
};

// Plain low-rank representation baseline: minimize ||Z||_* + lambda*||E||_1
// subject to X = D*Z + E. Pass d = x for self-representation.
LrrResult lrr_fit(const Matrix& x, const Matrix& d, double lambda,
                  const SolverOptions& opts = {});

// X*Z: samples reconstructed as combinations of other samples.
Matrix principal_features(const LatLrrModel& model, const Matrix& x);

// L*X: per-sample features from the row-space operator.
Matrix salient_features(const LatLrrModel& model, const Matrix& x);

}  // namespace dtml
