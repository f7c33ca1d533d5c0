#include "dtml/latlrr.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <string>

#include "dtml/errors.hpp"
#include "dtml/linalg.hpp"

namespace dtml {

namespace {

void check_options(const SolverOptions& o) {
  if (!(o.tol > 0.0)) throw ValidationError("solver: tol must be > 0");
  if (o.max_iter < 1) throw ValidationError("solver: max_iter must be >= 1");
  if (!(o.mu0 > 0.0)) throw ValidationError("solver: mu0 must be > 0");
  if (!(o.rho > 1.0)) throw ValidationError("solver: rho must be > 1");
  if (!(o.mu0 < o.mu_max)) {
    throw ValidationError("solver: mu0 must be < mu_max");
  }
}

void check_input(const Matrix& x, const char* op) {
  if (x.size() == 0) throw ValidationError(std::string(op) + ": empty matrix");
  if (!x.allFinite()) {
    throw ValidationError(std::string(op) + ": non-finite entries");
  }
}

// Explicit inverse of the SPD matrix g + I, formed once before the loop.
Matrix inverse_of_gram_plus_identity(Matrix g, const char* op) {
  g.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(op) + ": Cholesky factorization failed");
  }
  return llt.solve(Matrix::Identity(g.rows(), g.cols()));
}

}  // namespace

LatLrrModel latlrr_fit(const Matrix& x, double lambda1, double lambda2,
                       const SolverOptions& opts) {
  check_input(x, "latlrr_fit");
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) {
    throw ValidationError("latlrr_fit: lambda1 and lambda2 must be > 0");
  }
  check_options(opts);

  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  const double xnorm = std::max(x.norm(), 1.0);

  // Constant system matrices for the two least-squares updates.
  const Matrix inv_zn = inverse_of_gram_plus_identity(
      x.transpose() * x, "latlrr_fit");                          // (X'X+I)^-1
  const Matrix inv_lm = inverse_of_gram_plus_identity(
      x * x.transpose(), "latlrr_fit");                          // (XX'+I)^-1

  Matrix z = Matrix::Zero(n, n), l = Matrix::Zero(m, m);
  Matrix e = Matrix::Zero(m, n);
  Matrix y1 = Matrix::Zero(m, n);  // multiplier for X = XZ + LX + E
  Matrix y2 = Matrix::Zero(n, n);  // multiplier for Z = J
  Matrix y3 = Matrix::Zero(m, m);  // multiplier for L = S

  LatLrrModel model;
  model.lambda1 = lambda1;
  model.lambda2 = lambda2;
  double mu = opts.mu0;

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    // Splitting variables absorb the nuclear-norm proximal steps.
    const Matrix j = svt(z + y2 / mu, 1.0 / mu);
    const Matrix s = svt(l + y3 / mu, lambda1 / mu);

    // Least-squares updates for the codes, each against the freshest blocks.
    z = inv_zn * (x.transpose() * (x - l * x - e) + j +
                  (x.transpose() * y1 - y2) / mu);
    const Matrix xz = x * z;
    l = ((x - xz - e) * x.transpose() + s + (y1 * x.transpose() - y3) / mu) *
        inv_lm;
    const Matrix lx = l * x;
    e = soft_threshold(x - xz - lx + y1 / mu, lambda2 / mu);

    const Matrix r1 = x - xz - lx - e;
    const Matrix r2 = z - j;
    const Matrix r3 = l - s;
    y1 += mu * r1;
    y2 += mu * r2;
    y3 += mu * r3;

    const double res =
        std::max({r1.norm(), r2.norm(), r3.norm()}) / xnorm;
    model.history.push_back({iter, res, mu});
    if (res <= opts.tol) {
      model.converged = true;
      break;
    }
    mu = std::min(opts.rho * mu, opts.mu_max);
  }

  model.z = std::move(z);
  model.l = std::move(l);
  model.e = std::move(e);
  return model;
}

LrrResult lrr_fit(const Matrix& x, const Matrix& d, double lambda,
                  const SolverOptions& opts) {
  check_input(x, "lrr_fit");
  check_input(d, "lrr_fit");
  if (d.rows() != x.rows()) {
    throw ValidationError("lrr_fit: dictionary row count must match data");
  }
  if (!(lambda > 0.0)) throw ValidationError("lrr_fit: lambda must be > 0");
  check_options(opts);

  const Eigen::Index k = d.cols();
  const double xnorm = std::max(x.norm(), 1.0);
  const Matrix inv_dk =
      inverse_of_gram_plus_identity(d.transpose() * d, "lrr_fit");

  Matrix z = Matrix::Zero(k, x.cols());
  Matrix e = Matrix::Zero(x.rows(), x.cols());
  Matrix y1 = Matrix::Zero(x.rows(), x.cols());  // X = DZ + E
  Matrix y2 = Matrix::Zero(k, x.cols());         // Z = J

  LrrResult result;
  double mu = opts.mu0;

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    const Matrix j = svt(z + y2 / mu, 1.0 / mu);
    z = inv_dk *
        (d.transpose() * (x - e) + j + (d.transpose() * y1 - y2) / mu);
    const Matrix dz = d * z;
    e = soft_threshold(x - dz + y1 / mu, lambda / mu);

    const Matrix r1 = x - dz - e;
    const Matrix r2 = z - j;
    y1 += mu * r1;
    y2 += mu * r2;

    const double res = std::max(r1.norm(), r2.norm()) / xnorm;
    result.history.push_back({iter, res, mu});
    if (res <= opts.tol) {
      result.converged = true;
      break;
    }
    mu = std::min(opts.rho * mu, opts.mu_max);
  }

  result.z = std::move(z);
  result.e = std::move(e);
  return result;
}

Matrix principal_features(const LatLrrModel& model, const Matrix& x) {
  if (x.cols() != model.z.rows()) {
    throw ValidationError("principal_features: column count mismatch");
  }
  return x * model.z;
}

Matrix salient_features(const LatLrrModel& model, const Matrix& x) {
  if (x.rows() != model.l.cols()) {
    throw ValidationError("salient_features: row count mismatch");
  }
  return model.l * x;
}

}  // namespace dtml
