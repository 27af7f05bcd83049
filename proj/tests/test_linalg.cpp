#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mflr/linalg.hpp"
#include "support/oracles.hpp"

using namespace mflr;
using linalg::GenMatrix;
using linalg::SymMatrix;
using linalg::Vector;

TEST_CASE("spd_solve identity and diagonal") {
    const Vector b{1.0, 2.0, 3.0};
    const Vector x = linalg::spd_solve(SymMatrix::identity(3), b);
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(2.0));
    CHECK(x[2] == doctest::Approx(3.0));

    SymMatrix d(2);
    d.set(0, 0, 2.0);
    d.set(1, 1, 4.0);
    const Vector y = linalg::spd_solve(d, Vector{2.0, 8.0});
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(2.0));
}

TEST_CASE("spd_solve reproduces the analytic regression coefficients") {
    // C_XX and C_XY from the quadrature oracle; expected beta* frozen from
    // high-precision arithmetic.
    const oracle::ExpOracle o = oracle::exp_oracle();
    const Vector beta = linalg::spd_solve(o.c_xx, o.c_xy);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(beta[i] - oracle::kBetaStar[i]) <=
              1e-8 * std::abs(oracle::kBetaStar[i]));
    }
}

TEST_CASE("spd_solve errors") {
    SymMatrix indef(2);
    indef.set(0, 0, 1.0);
    indef.set(1, 1, -1.0);
    CHECK_THROWS_AS(linalg::spd_solve(indef, Vector{1.0, 1.0}), NotPositiveDefinite);
    CHECK_THROWS_AS(linalg::spd_solve(SymMatrix::identity(3), Vector{1.0, 1.0}),
                    DimensionMismatch);
}

TEST_CASE("spd_solve round trip on random SPD systems") {
    std::mt19937_64 gen(123);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 7;
        // A = B B^T + eps I keeps the condition number moderate.
        GenMatrix b(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) b(i, j) = u(gen);
        GenMatrix a = b * b.transposed();
        for (std::size_t i = 0; i < n; ++i) a(i, i) += 1e-3;
        const SymMatrix m = SymMatrix::from_general(a, 1e-9);

        Vector v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = u(gen);
        const Vector rhs = m.as_general() * v;
        const Vector sol = linalg::spd_solve(m, rhs);
        const Vector diff = sol - v;
        CHECK(diff.norm2() <= 1e-9 * std::max(1.0, v.norm2()));
    }
}

TEST_CASE("sym_eigvals on known spectra") {
    const Vector e1 = linalg::sym_eigvals(SymMatrix::diagonal(Vector{3.0, 1.0, 2.0}));
    CHECK(e1[0] == doctest::Approx(3.0));
    CHECK(e1[1] == doctest::Approx(2.0));
    CHECK(e1[2] == doctest::Approx(1.0));

    SymMatrix m(2);
    m.set(0, 0, 2.0);
    m.set(1, 1, 2.0);
    m.set(0, 1, 1.0);
    const Vector e2 = linalg::sym_eigvals(m);
    CHECK(e2[0] == doctest::Approx(3.0));
    CHECK(e2[1] == doctest::Approx(1.0));

    const Vector e3 = linalg::sym_eigvals(SymMatrix(4));
    for (std::size_t i = 0; i < 4; ++i) CHECK(e3[i] == 0.0);
}

TEST_CASE("sym_eigvals: permutation invariance and trace identity") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial % 6;
        SymMatrix m(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) m.set(i, j, u(gen));

        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), gen);
        SymMatrix pm(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) pm.set(i, j, m(perm[i], perm[j]));

        const Vector e = linalg::sym_eigvals(m);
        const Vector ep = linalg::sym_eigvals(pm);
        double scale = 1.0;
        for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(e[i]));
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(e[i] - ep[i]) <= 1e-10 * scale);

        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += e[i];
        CHECK(std::abs(sum - linalg::trace(m)) <= 1e-9 * std::max(1.0, std::abs(sum)));
    }
}

TEST_CASE("trace") {
    CHECK(linalg::trace(SymMatrix::identity(5)) == 5.0);
    CHECK(linalg::trace(SymMatrix::diagonal(Vector{1.5, -0.5})) == 1.0);
}

TEST_CASE("sample_cov basics") {
    const std::vector<Vector> s = {Vector{1.0}, Vector{2.0}, Vector{3.0}};
    const GenMatrix c = linalg::sample_cov(s, s);
    CHECK(c(0, 0) == doctest::Approx(1.0));  // variance of {1,2,3}

    std::vector<Vector> neg;
    for (const Vector& v : s) neg.push_back(-1.0 * v);
    const GenMatrix cn = linalg::sample_cov(s, neg);
    CHECK(cn(0, 0) == doctest::Approx(-1.0));

    const std::vector<Vector> one = {Vector{1.0}};
    CHECK_THROWS_AS(linalg::sample_cov(one, one), InsufficientSamples);
}

TEST_CASE("sample_cov self-covariance is symmetric PSD") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = 2 + trial % 4;
        const std::size_t n = 5 + trial;
        std::vector<Vector> s;
        for (std::size_t i = 0; i < n; ++i) {
            Vector v(d);
            for (std::size_t j = 0; j < d; ++j) v[j] = u(gen);
            s.push_back(std::move(v));
        }
        const GenMatrix c = linalg::sample_cov(s, s);
        const SymMatrix sym = SymMatrix::from_general(c, 1e-12);
        CHECK(linalg::trace(sym) >= 0.0);
        const Vector eig = linalg::sym_eigvals(sym);
        CHECK(eig[eig.dim() - 1] >= -1e-12 * std::max(1.0, linalg::trace(sym)));
    }
}
