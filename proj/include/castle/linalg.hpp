#pragma once

#include <Eigen/Dense>

#include "castle/errors.hpp"
#include "castle/rng.hpp"

namespace castle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Matrix exponential e^a by scaling-and-squaring with an order-18 Taylor
// core; the input is scaled so its 1-norm is at most 1 before the series.
Matrix mat_exp(const Matrix& a);

// Largest singular value via power iteration on a^T a, converged to the
// given relative tolerance on successive estimates.
double spectral_norm(const Matrix& a, double tol = 1e-10);

// Matrix filled with i.i.d. N(mu, sigma^2) entries from rng (row-major fill).
Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                       double mu = 0.0, double sigma = 1.0);

// Matrix filled with i.i.d. U(-bound, bound) entries from rng (row-major fill).
Matrix uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double bound);

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

} // namespace castle
