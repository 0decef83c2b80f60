#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "castle/linalg.hpp"

using namespace castle;

namespace {

// Independent oracle: truncated Taylor series in extended precision.
Matrix taylor_exp(const Matrix& a, int terms = 40) {
    const Eigen::Index n = a.rows();
    std::vector<long double> e(n * n, 0.0L), t(n * n, 0.0L), a_ld(n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            a_ld[i * n + j] = static_cast<long double>(a(i, j));
    for (Eigen::Index i = 0; i < n; ++i) {
        e[i * n + i] = 1.0L;
        t[i * n + i] = 1.0L;
    }
    for (int k = 1; k <= terms; ++k) {
        std::vector<long double> next(n * n, 0.0L);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index l = 0; l < n; ++l) {
                long double tv = t[i * n + l];
                if (tv == 0.0L) continue;
                for (Eigen::Index j = 0; j < n; ++j)
                    next[i * n + j] += tv * a_ld[l * n + j];
            }
        for (auto& v : next) v /= static_cast<long double>(k);
        t = next;
        for (Eigen::Index idx = 0; idx < n * n; ++idx) e[idx] += t[idx];
    }
    Matrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out(i, j) = static_cast<double>(e[i * n + j]);
    return out;
}

} // namespace

TEST_CASE("mat_exp identity and diagonal cases") {
    Matrix z = Matrix::Zero(3, 3);
    Matrix e = mat_exp(z);
    CHECK(e.isApprox(Matrix::Identity(3, 3), 1e-14));
    CHECK(e.trace() == doctest::Approx(3.0).epsilon(1e-14));

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 2.0;
    Matrix ed = mat_exp(d);
    CHECK(ed(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    CHECK(ed(1, 1) == doctest::Approx(std::exp(2.0)).epsilon(1e-12));
    CHECK(ed.trace() == doctest::Approx(std::exp(1.0) + std::exp(2.0)).epsilon(1e-12));
    CHECK(ed(0, 1) == 0.0);
}

TEST_CASE("mat_exp rejects bad input") {
    CHECK_THROWS_AS(mat_exp(Matrix::Zero(2, 3)), DimensionError);
    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(mat_exp(bad), NumericError);
}

TEST_CASE("mat_exp matches the Taylor oracle on random matrices") {
    Rng rng(12345);
    for (int rep = 0; rep < 1000; ++rep) {
        int n = (rep % 2 == 0) ? 2 : 3;
        Matrix a = uniform_matrix(rng, n, n, 2.0);
        Matrix got = mat_exp(a);
        Matrix want = taylor_exp(a);
        double rel = std::abs(got.trace() - want.trace()) / std::max(1.0, std::abs(want.trace()));
        CHECK(rel < 1e-9);
    }
    // a single 3x3 in [-1,1] with elementwise comparison
    Matrix a = uniform_matrix(rng, 3, 3, 1.0);
    Matrix got = mat_exp(a);
    Matrix want = taylor_exp(a);
    CHECK((got - want).norm() / want.norm() < 1e-9);
}

TEST_CASE("mat_exp of strictly upper-triangular matrices has trace n") {
    Rng rng(99);
    for (int rep = 0; rep < 100; ++rep) {
        Matrix a = uniform_matrix(rng, 4, 4, 5.0);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j <= i; ++j) a(i, j) = 0.0;
        CHECK(std::abs(mat_exp(a).trace() - 4.0) < 1e-12);
    }
}

TEST_CASE("spectral_norm basics") {
    CHECK(spectral_norm(Matrix::Identity(4, 4), 1e-12) == doctest::Approx(1.0).epsilon(1e-10));
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    CHECK(spectral_norm(d, 1e-12) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK_THROWS_AS(spectral_norm(Matrix(), 1e-10), DimensionError);
}

TEST_CASE("spectral_norm matches Jacobi SVD oracle") {
    Rng rng(4242);
    for (int rep = 0; rep < 50; ++rep) {
        Matrix a = gaussian_matrix(rng, 5, 5);
        double got = spectral_norm(a, 1e-12);
        Eigen::JacobiSVD<Matrix> svd(a);
        double want = svd.singularValues()(0);
        CHECK(std::abs(got - want) / want < 1e-6);
    }
}

TEST_CASE("spectral_norm scales homogeneously") {
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix a = gaussian_matrix(rng, 4, 6);
        double c = rng.next_gaussian(0.0, 3.0);
        double lhs = spectral_norm(c * a, 1e-12);
        double rhs = std::abs(c) * spectral_norm(a, 1e-12);
        CHECK(std::abs(lhs - rhs) / std::max(rhs, 1e-12) < 1e-8);
    }
}

TEST_CASE("rng determinism and stream separation") {
    Rng a(42, 0), b(42, 0);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    // distinct streams share no 1000-long output prefix
    std::vector<std::uint64_t> streams = {0, 1, 2, 77};
    std::vector<std::vector<std::uint64_t>> prefixes;
    for (auto s : streams) {
        Rng r(42, s);
        std::vector<std::uint64_t> p(1000);
        for (auto& v : p) v = r.next_u64();
        prefixes.push_back(std::move(p));
    }
    for (std::size_t i = 0; i < prefixes.size(); ++i)
        for (std::size_t j = i + 1; j < prefixes.size(); ++j)
            CHECK(prefixes[i] != prefixes[j]);
}

TEST_CASE("gaussian sampling moments and degenerate sigma") {
    Rng rng(2024);
    auto zeros = rng.gaussian(1.5, 0.0, 10);
    for (double v : zeros) CHECK(v == 1.5);

    const std::size_t n = 100000;
    auto draws = rng.gaussian(0.0, 1.0, n);
    double mean = 0.0;
    for (double v : draws) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : draws) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);

    Rng r1(5, 3), r2(5, 3);
    auto s1 = r1.gaussian(0.0, 1.0, 50);
    auto s2 = r2.gaussian(0.0, 1.0, 50);
    CHECK(s1 == s2);

    CHECK_THROWS_AS(rng.gaussian(0.0, -1.0, 4), ArgumentError);
}
