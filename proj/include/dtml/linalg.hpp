#pragma once

#include "dtml/matrix.hpp"

namespace dtml {

struct Norms {
  double frobenius = 0.0;
  double nuclear = 0.0;
  double l1 = 0.0;    // sum of absolute entries
  double linf = 0.0;  // largest absolute entry
};

// Thin SVD of a non-empty finite matrix. One deterministic backend
// (bidiagonal divide-and-conquer) is used everywhere so results are
// bit-stable per platform. Throws NumericalError if the solver fails.
SvdFactors svd(const Matrix& a);

// Singular value thresholding: u * max(s - tau, 0) * vt. The proximal
// operator of tau * nuclear norm.
Matrix svt(const Matrix& a, double tau);

// Elementwise sign(x) * max(|x| - tau, 0). The proximal operator of
// tau * l1 norm.
Matrix soft_threshold(const Matrix& a, double tau);

// Moore-Penrose inverse via SVD. Singular values <= rank_tol are treated as
// zero; pass a negative rank_tol for the default
// max(rows, cols) * machine-epsilon * sigma_max.
Matrix pseudo_inverse(const Matrix& a, double rank_tol = -1.0);

// (f * f^T + lambda * I)^{-1}, symmetric positive definite for lambda > 0.
Matrix ridge_gram_inverse(const Matrix& f, double lambda);

Norms norms(const Matrix& a);

}  // namespace dtml
