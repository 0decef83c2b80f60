#include "castle/linalg.hpp"

#include <cmath>

namespace castle {

Matrix mat_exp(const Matrix& a) {
    if (a.rows() != a.cols())
        throw DimensionError("mat_exp: matrix must be square");
    if (!a.allFinite())
        throw NumericError("mat_exp: input has non-finite entries");

    const Eigen::Index n = a.rows();
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();

    int squarings = 0;
    if (norm1 > 1.0)
        squarings = static_cast<int>(std::ceil(std::log2(norm1)));

    Matrix b = a / std::ldexp(1.0, squarings);

    Matrix result = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k <= 18; ++k) {
        term = (term * b) / static_cast<double>(k);
        result += term;
    }
    for (int i = 0; i < squarings; ++i) result = result * result;

    if (!result.allFinite())
        throw NumericError("mat_exp: overflow, result has non-finite entries");
    return result;
}

double spectral_norm(const Matrix& a, double tol) {
    if (a.size() == 0)
        throw DimensionError("spectral_norm: matrix is empty");
    if (tol <= 0.0)
        throw ArgumentError("spectral_norm: tolerance must be positive");

    const Eigen::Index n = a.cols();
    Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));

    const int max_iters = 100000;
    double lambda = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        Vector w = a.transpose() * (a * v);
        double norm = w.norm();
        if (norm == 0.0) return 0.0; // v in the null space of a^T a
        double next = v.dot(w);      // Rayleigh quotient since ||v|| = 1
        v = w / norm;
        double prev_sigma = std::sqrt(std::max(lambda, 0.0));
        double sigma = std::sqrt(std::max(next, 0.0));
        if (it > 1 && std::abs(sigma - prev_sigma) <= tol * std::max(sigma, 1e-300))
            return sigma;
        lambda = next;
    }
    throw NumericError("spectral_norm: power iteration did not converge after " +
                       std::to_string(max_iters) + " iterations");
}

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                       double mu, double sigma) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = rng.next_gaussian(mu, sigma);
    return m;
}

Matrix uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = (2.0 * rng.next_uniform() - 1.0) * bound;
    return m;
}

} // namespace castle
