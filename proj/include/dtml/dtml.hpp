#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dtml/matrix.hpp"

namespace dtml {

// The three model variants compared in the ablation study.
enum class Mode { Full, SalientOnly, SharedSingle };

const char* mode_name(Mode mode);
Mode mode_from_name(const std::string& name);

struct FitOptions {
  double tol = 1e-6;  // relative objective change between sweeps
  int max_iter = 100;
};

// Pair of ridge-regularized transformation matrices regressing the principal
// features A and salient features B jointly onto the one-hot labels Y:
//   min 1/2*||Y - W1*A - W2*B||_F^2 + lambda3/2*||W1||_F^2
//                                   + lambda4/2*||W2||_F^2
struct DtmlModel {
  Matrix w1;  // c x m
  Matrix w2;  // c x m
  double lambda3 = 0.0;
  double lambda4 = 0.0;
  Mode mode = Mode::Full;
  // objective_trace[0] is the value at the zero initialization; one entry is
  // appended per sweep. Non-increasing by construction.
  std::vector<double> objective_trace;
  bool converged = false;

  int sweeps() const {
    return objective_trace.empty()
               ? 0
               : static_cast<int>(objective_trace.size()) - 1;
  }
  double objective_final() const {
    return objective_trace.empty() ? 0.0 : objective_trace.back();
  }
};

// Called after each completed sweep with the current iterates; used by the
// bench harness to log convergence without re-deriving the solver.
using SweepObserver = std::function<void(int sweep, const Matrix& w1,
                                         const Matrix& w2, double objective)>;

// Alternating exact coordinate minimization, W1 before W2 in each sweep, from
// zero initialization. The Gram inverses T1 = (A*A' + lambda3*I)^-1 and
// T2 = (B*B' + lambda4*I)^-1 are precomputed once; they do not depend on the
// iterates. Stops when |obj_t - obj_{t-1}| / max(obj_{t-1}, 1e-12) < tol.
DtmlModel dtml_fit(const Matrix& a, const Matrix& b, const Matrix& y,
                   double lambda3, double lambda4, const FitOptions& opts = {},
                   const SweepObserver& observer = nullptr);

struct JointSolution {
  Matrix w1;
  Matrix w2;
};

// Independent oracle: the objective is a jointly convex quadratic, so the
// unique minimizer solves one stacked normal-equation system
//   (M*M' + blkdiag(lambda3*I, lambda4*I)) * [W1 W2]' = M*Y',  M = [A; B].
JointSolution joint_closed_form(const Matrix& a, const Matrix& b,
                                const Matrix& y, double lambda3,
                                double lambda4);

// Closed-form ablation variants. SalientOnly ridge-regresses Y on B alone
// (w1 = 0 exactly); SharedSingle fits one W to A + B and stores it in both
// slots so the embedding path stays mode-agnostic.
DtmlModel fit_ablation(Mode mode, const Matrix& a, const Matrix& b,
                       const Matrix& y, double lambda);

// The monitored objective (factor 1/2 on every term).
double objective(const Matrix& w1, const Matrix& w2, const Matrix& a,
                 const Matrix& b, const Matrix& y, double lambda3,
                 double lambda4);

}  // namespace dtml
