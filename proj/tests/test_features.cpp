#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mflr/features.hpp"
#include "mflr/models.hpp"
#include "support/oracles.hpp"

using namespace mflr;
using features::FeatureMap;
using features::InputDistribution;
using linalg::SymMatrix;
using linalg::Vector;

TEST_CASE("eval_features full quadratic") {
    const FeatureMap q1 = FeatureMap::full_quadratic(1);
    const Vector x = q1.eval(Vector{2.0});
    CHECK(x.dim() == 3);
    CHECK(x[0] == 1.0);
    CHECK(x[1] == 2.0);
    CHECK(x[2] == 4.0);

    const FeatureMap q2 = FeatureMap::full_quadratic(2);
    const Vector x2 = q2.eval(Vector{0.0, 0.0});
    CHECK(x2.dim() == 6);
    CHECK(x2[0] == 1.0);
    for (std::size_t i = 1; i < 6; ++i) CHECK(x2[i] == 0.0);

    CHECK(FeatureMap::full_quadratic(5).output_dim() == 21);

    CHECK_THROWS_AS(q2.eval(Vector{1.0}), DimensionMismatch);
}

TEST_CASE("feature ordering is constant, linear, quadratic-lex") {
    const FeatureMap q2 = FeatureMap::full_quadratic(2);
    const Vector x = q2.eval(Vector{2.0, 3.0});
    CHECK(x[0] == 1.0);   // 1
    CHECK(x[1] == 2.0);   // z1
    CHECK(x[2] == 3.0);   // z2
    CHECK(x[3] == 4.0);   // z1^2
    CHECK(x[4] == 6.0);   // z1 z2
    CHECK(x[5] == 9.0);   // z2^2
}

TEST_CASE("exact_cxx for the analytic example") {
    const SymMatrix c =
        features::exact_cxx(FeatureMap::full_quadratic(1), InputDistribution::uniform(0, 5));
    const double expected[3][3] = {
        {1.0, 2.5, 25.0 / 3.0}, {2.5, 25.0 / 3.0, 31.25}, {25.0 / 3.0, 31.25, 125.0}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(c(i, j) == doctest::Approx(expected[i][j]));
}

TEST_CASE("exact_cxx corner cases") {
    const FeatureMap constant =
        FeatureMap::custom_monomials(1, {{0}});
    const SymMatrix c1 = features::exact_cxx(constant, InputDistribution::uniform(0, 5));
    CHECK(c1.dim() == 1);
    CHECK(c1(0, 0) == 1.0);

    const FeatureMap lin = FeatureMap::custom_monomials(1, {{0}, {1}});
    const SymMatrix c2 = features::exact_cxx(lin, InputDistribution::uniform(-1, 1));
    CHECK(c2(0, 0) == doctest::Approx(1.0));
    CHECK(c2(0, 1) == doctest::Approx(0.0));
    CHECK(c2(1, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("log-uniform moments match quadrature") {
    using features::CoordinateRange;
    using features::Marginal;
    const InputDistribution dist({CoordinateRange{Marginal::LogUniform, 2.0, 7.0}});
    for (int k = 1; k <= 4; ++k) {
        // E[Z^k] for Z log-uniform = E[e^{kU}] with U uniform on [ln 2, ln 7].
        const double lo = std::log(2.0), hi = std::log(7.0);
        const int steps = 200000;
        double acc = 0.0;
        for (int i = 0; i < steps; ++i) {
            const double u = lo + (hi - lo) * (i + 0.5) / steps;
            acc += std::exp(k * u);
        }
        acc /= steps;
        CHECK(dist.raw_moment(0, k) == doctest::Approx(acc).epsilon(1e-6));
    }
}

TEST_CASE("sample_cxx matches the definition") {
    const FeatureMap lin = FeatureMap::custom_monomials(1, {{0}, {1}});
    const std::vector<Vector> one = {Vector{2.0}};  // x = (1, 2)
    const SymMatrix m = features::sample_cxx(lin, one);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == 2.0);
    CHECK(m(1, 1) == 4.0);

    const std::vector<Vector> zeros = {Vector{0.0}, Vector{0.0}};
    const SymMatrix mz = features::sample_cxx(lin, zeros);
    CHECK(mz(0, 0) == 1.0);
    CHECK(mz(0, 1) == 0.0);
    CHECK(mz(1, 1) == 0.0);

    CHECK_THROWS_AS(features::sample_cxx(lin, std::vector<Vector>{}), EmptyInput);
}

TEST_CASE("sample_cxx converges to exact_cxx") {
    const FeatureMap q = FeatureMap::full_quadratic(1);
    const InputDistribution dist = InputDistribution::uniform(0, 5);
    rng::Rng gen(404);
    std::vector<Vector> zs;
    const std::size_t n = 1000000;
    zs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) zs.push_back(dist.draw(gen));
    const SymMatrix s = features::sample_cxx(q, zs);
    const SymMatrix e = features::exact_cxx(q, dist);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::abs(s(i, j) - e(i, j)) <= 0.005 * std::max(1.0, std::abs(e(i, j))));
        }
    }
}

TEST_CASE("standardized exact_cxx agrees with Monte Carlo, including log-uniform") {
    const features::FeatureMap map = models::cdr_default_features();
    const InputDistribution dist = models::cdr_input_distribution();
    const SymMatrix exact = features::exact_cxx(map, dist);

    rng::Rng gen(11);
    std::vector<Vector> zs;
    const std::size_t n = 200000;
    zs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) zs.push_back(dist.draw(gen));
    const SymMatrix mc = features::sample_cxx(map, zs);
    for (std::size_t i = 0; i < exact.dim(); ++i) {
        for (std::size_t j = i; j < exact.dim(); ++j) {
            CHECK(std::abs(mc(i, j) - exact(i, j)) <= 0.02);
        }
    }
    // The standardized moment matrix must be well conditioned and SPD.
    const Vector eig = linalg::sym_eigvals(exact);
    CHECK(eig[eig.dim() - 1] > 0.0);
    CHECK(eig[0] / eig[eig.dim() - 1] < 1e4);
}

TEST_CASE("custom map must start with the constant feature") {
    CHECK_THROWS_AS(FeatureMap::custom_monomials(1, {{1}}), InvalidInput);
}
