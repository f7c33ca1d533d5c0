#include "dtml/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <limits>
#include <string>

#include "dtml/errors.hpp"

namespace dtml {

namespace {

void require_nonempty_finite(const Matrix& a, const char* op) {
  if (a.size() == 0) throw ValidationError(std::string(op) + ": empty matrix");
  if (!a.allFinite()) {
    throw ValidationError(std::string(op) + ": non-finite entries");
  }
}

}  // namespace

SvdFactors svd(const Matrix& a) {
  require_nonempty_finite(a, "svd");
  Eigen::BDCSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() == Eigen::Success && solver.matrixU().allFinite() &&
      solver.singularValues().allFinite() && solver.matrixV().allFinite()) {
    return {solver.matrixU(), solver.singularValues(),
            solver.matrixV().transpose()};
  }
  // Eigen's divide-and-conquer kernel can report success yet emit NaN factors
  // when deflation hits a cluster of near-equal singular values. The one-sided
  // Jacobi route has no deflation step, so it is the recovery path; the switch
  // depends only on the input matrix, keeping results reproducible.
  Eigen::JacobiSVD<Matrix> fallback(a,
                                    Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (fallback.info() != Eigen::Success || !fallback.matrixU().allFinite() ||
      !fallback.singularValues().allFinite() ||
      !fallback.matrixV().allFinite()) {
    throw NumericalError("svd: decomposition did not converge");
  }
  return {fallback.matrixU(), fallback.singularValues(),
          fallback.matrixV().transpose()};
}

Matrix svt(const Matrix& a, double tau) {
  if (tau < 0.0) throw ValidationError("svt: tau must be >= 0");
  const SvdFactors f = svd(a);
  const Vector shrunk = (f.s.array() - tau).max(0.0);
  // Singular values are sorted, so the survivors form a prefix.
  Eigen::Index r = 0;
  while (r < shrunk.size() && shrunk(r) > 0.0) ++r;
  if (r == 0) return Matrix::Zero(a.rows(), a.cols());
  return f.u.leftCols(r) * shrunk.head(r).asDiagonal() * f.vt.topRows(r);
}

Matrix soft_threshold(const Matrix& a, double tau) {
  if (tau < 0.0) throw ValidationError("soft_threshold: tau must be >= 0");
  return a.unaryExpr([tau](double v) {
    return v > tau ? v - tau : (v < -tau ? v + tau : 0.0);
  });
}

Matrix pseudo_inverse(const Matrix& a, double rank_tol) {
  const SvdFactors f = svd(a);
  const double smax = f.s.size() > 0 ? f.s(0) : 0.0;
  const double tol =
      rank_tol >= 0.0
          ? rank_tol
          : static_cast<double>(std::max(a.rows(), a.cols())) *
                std::numeric_limits<double>::epsilon() * smax;
  const Vector inv =
      f.s.unaryExpr([tol](double s) { return s > tol ? 1.0 / s : 0.0; });
  return f.vt.transpose() * inv.asDiagonal() * f.u.transpose();
}

Matrix ridge_gram_inverse(const Matrix& f, double lambda) {
  if (!(lambda > 0.0)) {
    throw ValidationError("ridge_gram_inverse: lambda must be > 0");
  }
  require_nonempty_finite(f, "ridge_gram_inverse");
  const Eigen::Index m = f.rows();
  Matrix gram = f * f.transpose();
  gram.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ridge_gram_inverse: Cholesky factorization failed");
  }
  return llt.solve(Matrix::Identity(m, m));
}

Norms norms(const Matrix& a) {
  if (!a.allFinite()) throw ValidationError("norms: non-finite entries");
  Norms n;
  n.frobenius = a.norm();
  n.l1 = a.cwiseAbs().sum();
  if (a.size() > 0) {
    n.linf = a.cwiseAbs().maxCoeff();
    n.nuclear = svd(a).s.sum();
  }
  return n;
}

}  // namespace dtml
