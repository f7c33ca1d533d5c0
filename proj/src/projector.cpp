#include "dtml/projector.hpp"

#include <algorithm>
#include <string>

#include "dtml/errors.hpp"
#include "dtml/linalg.hpp"

namespace dtml {

ProjectionMatrix fit_projection(const Matrix& x, const Matrix& xz,
                                double rank_tol) {
  if (x.rows() != xz.rows() || x.cols() != xz.cols()) {
    throw ValidationError("fit_projection: x and xz must share a shape");
  }
  if (x.size() == 0) throw ValidationError("fit_projection: empty input");

  ProjectionMatrix pm;
  pm.p = xz * pseudo_inverse(x, rank_tol);
  pm.fit_residual = (pm.p * x - xz).norm() / std::max(xz.norm(), 1.0);
  if (pm.fit_residual > 1e-6) {
    throw ValidationError(
        "fit_projection: inconsistent system, xz is not of the form x*z "
        "(residual " +
        std::to_string(pm.fit_residual) + ")");
  }
  return pm;
}

Matrix project(const ProjectionMatrix& pm, const Matrix& samples) {
  if (samples.rows() != pm.p.cols()) {
    throw ValidationError("project: sample row count mismatch");
  }
  return pm.p * samples;
}

}  // namespace dtml
