#include "dtml/dtml.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "dtml/errors.hpp"
#include "dtml/linalg.hpp"

namespace dtml {

namespace {

void check_problem(const Matrix& a, const Matrix& b, const Matrix& y,
                   double lambda3, double lambda4) {
  if (a.size() == 0 || b.size() == 0 || y.size() == 0) {
    throw ValidationError("dtml: empty input matrix");
  }
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError("dtml: feature matrices must share a shape");
  }
  if (y.cols() != a.cols()) {
    throw ValidationError("dtml: label columns must match sample count");
  }
  if (!(lambda3 > 0.0) || !(lambda4 > 0.0)) {
    throw ValidationError("dtml: lambda3 and lambda4 must be > 0");
  }
  if (!a.allFinite() || !b.allFinite() || !y.allFinite()) {
    throw ValidationError("dtml: non-finite entries");
  }
}

}  // namespace

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::Full:
      return "full";
    case Mode::SalientOnly:
      return "salient_only";
    case Mode::SharedSingle:
      return "shared_single";
  }
  return "full";
}

Mode mode_from_name(const std::string& name) {
  if (name == "full") return Mode::Full;
  if (name == "salient_only") return Mode::SalientOnly;
  if (name == "shared_single") return Mode::SharedSingle;
  throw ValidationError("unknown mode: " + name);
}

double objective(const Matrix& w1, const Matrix& w2, const Matrix& a,
                 const Matrix& b, const Matrix& y, double lambda3,
                 double lambda4) {
  if (w1.rows() != y.rows() || w2.rows() != y.rows() ||
      w1.cols() != a.rows() || w2.cols() != b.rows() ||
      a.cols() != y.cols() || b.cols() != y.cols()) {
    throw ValidationError("objective: shape mismatch");
  }
  const double fit = (y - w1 * a - w2 * b).squaredNorm();
  return 0.5 * fit + 0.5 * lambda3 * w1.squaredNorm() +
         0.5 * lambda4 * w2.squaredNorm();
}

DtmlModel dtml_fit(const Matrix& a, const Matrix& b, const Matrix& y,
                   double lambda3, double lambda4, const FitOptions& opts,
                   const SweepObserver& observer) {
  check_problem(a, b, y, lambda3, lambda4);
  if (!(opts.tol > 0.0)) throw ValidationError("dtml_fit: tol must be > 0");
  if (opts.max_iter < 1) {
    throw ValidationError("dtml_fit: max_iter must be >= 1");
  }

  const Eigen::Index m = a.rows();
  const Eigen::Index c = y.rows();

  // Constant pieces of the two coordinate updates.
  const Matrix t1 = ridge_gram_inverse(a, lambda3);
  const Matrix t2 = ridge_gram_inverse(b, lambda4);
  const Matrix yat = y * a.transpose();
  const Matrix ybt = y * b.transpose();
  const Matrix bat = b * a.transpose();
  const Matrix abt = a * b.transpose();

  DtmlModel model;
  model.lambda3 = lambda3;
  model.lambda4 = lambda4;
  model.mode = Mode::Full;
  model.w1 = Matrix::Zero(c, m);
  model.w2 = Matrix::Zero(c, m);
  model.objective_trace.push_back(
      objective(model.w1, model.w2, a, b, y, lambda3, lambda4));

  for (int sweep = 1; sweep <= opts.max_iter; ++sweep) {
    model.w1 = (yat - model.w2 * bat) * t1;
    model.w2 = (ybt - model.w1 * abt) * t2;
    const double obj =
        objective(model.w1, model.w2, a, b, y, lambda3, lambda4);
    const double prev = model.objective_trace.back();
    model.objective_trace.push_back(obj);
    if (observer) observer(sweep, model.w1, model.w2, obj);
    if (std::abs(obj - prev) / std::max(prev, 1e-12) < opts.tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

JointSolution joint_closed_form(const Matrix& a, const Matrix& b,
                                const Matrix& y, double lambda3,
                                double lambda4) {
  check_problem(a, b, y, lambda3, lambda4);
  const Eigen::Index m = a.rows();

  Matrix stacked(2 * m, a.cols());
  stacked.topRows(m) = a;
  stacked.bottomRows(m) = b;

  Matrix gram = stacked * stacked.transpose();
  gram.diagonal().head(m).array() += lambda3;
  gram.diagonal().tail(m).array() += lambda4;

  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("joint_closed_form: Cholesky factorization failed");
  }
  const Matrix k = llt.solve(stacked * y.transpose());  // 2m x c
  return {k.topRows(m).transpose(), k.bottomRows(m).transpose()};
}

DtmlModel fit_ablation(Mode mode, const Matrix& a, const Matrix& b,
                       const Matrix& y, double lambda) {
  if (mode == Mode::Full) {
    throw ValidationError("fit_ablation: use dtml_fit for the full model");
  }
  check_problem(a, b, y, lambda, lambda);

  DtmlModel model;
  model.lambda3 = lambda;
  model.lambda4 = lambda;
  model.mode = mode;
  if (mode == Mode::SalientOnly) {
    model.w1 = Matrix::Zero(y.rows(), a.rows());
    model.w2 = (y * b.transpose()) * ridge_gram_inverse(b, lambda);
  } else {  // SharedSingle: one W on the summed features, stored in both slots
    const Matrix sum = a + b;
    const Matrix w = (y * sum.transpose()) * ridge_gram_inverse(sum, lambda);
    model.w1 = w;
    model.w2 = w;
  }
  model.objective_trace.push_back(0.5 * y.squaredNorm());
  model.objective_trace.push_back(
      objective(model.w1, model.w2, a, b, y, lambda, lambda));
  model.converged = true;
  return model;
}

}  // namespace dtml
