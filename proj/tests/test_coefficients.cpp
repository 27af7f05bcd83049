#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mflr/coefficients.hpp"
#include "support/oracles.hpp"

using namespace mflr;
using coefficients::CoefficientStrategy;
using linalg::GenMatrix;
using linalg::SymMatrix;
using linalg::Vector;
using statistics::ModelStats;

namespace {

ModelStats synthetic_stats(const GenMatrix& c11, const GenMatrix& c12, const GenMatrix& c22) {
    ModelStats s;
    s.fidelities = 2;
    s.sigma = {1.0, 1.0};
    s.rho = {1.0, 0.5};
    s.has_matrices = true;
    s.c1k = {c11, c12};
    s.ckk = {SymMatrix::from_general(c11, 1e-6), SymMatrix::from_general(c22, 1e-6)};
    s.provenance = "synthetic";
    return s;
}

// Random SPD block matrix [[C11, C12], [C21, C22]] so the C blocks are a
// genuine joint covariance.
void random_joint_cov(std::mt19937_64& gen, std::size_t d, GenMatrix& c11, GenMatrix& c12,
                      GenMatrix& c22) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GenMatrix b(2 * d, 2 * d);
    for (std::size_t i = 0; i < 2 * d; ++i)
        for (std::size_t j = 0; j < 2 * d; ++j) b(i, j) = u(gen);
    GenMatrix joint = b * b.transposed();
    for (std::size_t i = 0; i < 2 * d; ++i) joint(i, i) += 0.05;
    c11 = GenMatrix(d, d);
    c12 = GenMatrix(d, d);
    c22 = GenMatrix(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            c11(i, j) = joint(i, j);
            c12(i, j) = joint(i, d + j);
            c22(i, j) = joint(d + i, d + j);
        }
    }
}

}  // namespace

TEST_CASE("mf-mean coefficient on exact statistics is 12.79") {
    const CoefficientStrategy s = coefficients::mf_mean_alpha(statistics::exact_stats_exp());
    CHECK(std::abs(s.alphas[0] - 12.79) <= 0.01);
    CHECK(s.alphas[0] == doctest::Approx(oracle::kAlphaMean).epsilon(1e-12));
}

TEST_CASE("mf-mean degenerate cases") {
    ModelStats s;
    s.fidelities = 2;
    s.sigma = {2.0, 2.0};
    s.rho = {1.0, 1.0};
    s.provenance = "synthetic";
    CHECK(coefficients::mf_mean_alpha(s).alphas[0] == doctest::Approx(1.0));
    s.rho[1] = 0.0;
    CHECK(coefficients::mf_mean_alpha(s).alphas[0] == 0.0);
}

TEST_CASE("mf-alpha-star on exact statistics is 11.70") {
    const CoefficientStrategy s = coefficients::mf_alpha_star(statistics::exact_stats_exp());
    CHECK(std::abs(s.alphas[0] - 11.70) <= 0.01);
    CHECK(s.alphas[0] == doctest::Approx(oracle::kAlphaStar).epsilon(1e-12));
}

TEST_CASE("mf-alpha-star trivial identities") {
    GenMatrix c(2, 2);
    c(0, 0) = 2.0;
    c(1, 1) = 3.0;
    CHECK(coefficients::mf_alpha_star(synthetic_stats(c, c, c)).alphas[0] ==
          doctest::Approx(1.0));
    GenMatrix zero(2, 2);
    CHECK(coefficients::mf_alpha_star(synthetic_stats(c, zero, c)).alphas[0] == 0.0);

    ModelStats no_matrices;
    no_matrices.fidelities = 2;
    no_matrices.sigma = {1.0, 1.0};
    no_matrices.rho = {1.0, 0.9};
    no_matrices.provenance = "synthetic";
    CHECK_THROWS_AS(coefficients::mf_alpha_star(no_matrices), MissingMatrixStats);
}

TEST_CASE("mf-A-star matches the published matrix to one decimal") {
    const CoefficientStrategy s = coefficients::mf_A_star(statistics::exact_stats_exp());
    const GenMatrix& a = s.matrices[0];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            CHECK(a(i, j) == doctest::Approx(oracle::kAStar[i][j]).epsilon(1e-9));
            const double paper[3][3] = {{19.6, -7.3, 1.3},
                                        {168.6, -69.9, 10.5},
                                        {1330.6, -553.6, 75.2}};
            CHECK(std::abs(a(i, j) - paper[i][j]) < 0.05);
        }
    }
}

TEST_CASE("mf-A-star trivial identities") {
    GenMatrix c(2, 2);
    c(0, 0) = 2.0;
    c(0, 1) = 0.3;
    c(1, 0) = 0.3;
    c(1, 1) = 3.0;
    const CoefficientStrategy s = coefficients::mf_A_star(synthetic_stats(c, c, c));
    CHECK(s.matrices[0](0, 0) == doctest::Approx(1.0));
    CHECK(s.matrices[0](0, 1) == doctest::Approx(0.0).epsilon(1e-12));

    GenMatrix c12(2, 2), c22(2, 2);
    c12(0, 0) = 2.0;
    c12(1, 1) = 6.0;
    c22(0, 0) = 4.0;
    c22(1, 1) = 3.0;
    const CoefficientStrategy d =
        coefficients::mf_A_star(synthetic_stats(c, c12, c22));
    CHECK(d.matrices[0](0, 0) == doctest::Approx(0.5));
    CHECK(d.matrices[0](1, 1) == doctest::Approx(2.0));
}

TEST_CASE("mf-A-star refuses singular C_kk") {
    // Rank-1 C22: covariance of two samples of a 2-vector.
    GenMatrix c22(2, 2);
    c22(0, 0) = 1.0;
    c22(0, 1) = 1.0;
    c22(1, 0) = 1.0;
    c22(1, 1) = 1.0;
    GenMatrix c11 = GenMatrix::identity(2);
    CHECK_THROWS_AS(coefficients::mf_A_star(synthetic_stats(c11, c11, c22)),
                    NotPositiveDefinite);
}

TEST_CASE("trace of the closed-form covariance is minimal at alpha-star") {
    std::mt19937_64 gen(2718);
    std::uniform_real_distribution<double> ua(-25.0, 25.0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t d = 2 + trial % 4;
        GenMatrix c11, c12, c22;
        random_joint_cov(gen, d, c11, c12, c22);
        const ModelStats stats = synthetic_stats(c11, c12, c22);
        const double alpha_star = coefficients::mf_alpha_star(stats).alphas[0];
        const double t_star =
            linalg::trace(coefficients::scalar_estimator_covariance(stats, alpha_star, 7, 103));
        for (int probe = 0; probe < 25; ++probe) {
            const double alpha = ua(gen);
            const double t =
                linalg::trace(coefficients::scalar_estimator_covariance(stats, alpha, 7, 103));
            CHECK(t_star <= t + 1e-9 * std::abs(t));
        }
    }
}

TEST_CASE("A-star dominates every eigenvalue of the closed-form covariance") {
    std::mt19937_64 gen(40);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t d = 2 + trial % 3;
        GenMatrix c11, c12, c22;
        random_joint_cov(gen, d, c11, c12, c22);
        const ModelStats stats = synthetic_stats(c11, c12, c22);
        const GenMatrix a_star = coefficients::mf_A_star(stats).matrices[0];
        const Vector eig_star = linalg::sym_eigvals(
            coefficients::matrix_estimator_covariance(stats, a_star, 5, 61));
        for (int probe = 0; probe < 20; ++probe) {
            GenMatrix a(d, d);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) a(i, j) = u(gen);
            const Vector eig = linalg::sym_eigvals(
                coefficients::matrix_estimator_covariance(stats, a, 5, 61));
            for (std::size_t i = 0; i < d; ++i) CHECK(eig_star[i] <= eig[i] + 1e-9);
        }
    }
}

TEST_CASE("all strategies coincide when C12 C22^{-1} is a multiple of I") {
    std::mt19937_64 gen(31);
    GenMatrix c11, c12_unused, c22;
    random_joint_cov(gen, 3, c11, c12_unused, c22);
    const double alpha = 1.7;
    const GenMatrix c12 = alpha * c22;  // then A* = alpha I and alpha* = alpha
    const ModelStats stats = synthetic_stats(c11, c12, c22);

    const double a_mean_star = coefficients::mf_alpha_star(stats).alphas[0];
    CHECK(a_mean_star == doctest::Approx(alpha).epsilon(1e-9));
    const GenMatrix a_star = coefficients::mf_A_star(stats).matrices[0];
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(a_star(i, j) == doctest::Approx(i == j ? alpha : 0.0).epsilon(1e-7));

    const SymMatrix cov_scalar =
        coefficients::scalar_estimator_covariance(stats, alpha, 11, 173);
    const SymMatrix cov_matrix =
        coefficients::matrix_estimator_covariance(stats, a_star, 11, 173);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(cov_scalar(i, j) == doctest::Approx(cov_matrix(i, j)).epsilon(1e-7));
}

TEST_CASE("strategy names round trip") {
    using coefficients::StrategyKind;
    for (StrategyKind k : {StrategyKind::SingleFidelity, StrategyKind::MfMean,
                           StrategyKind::MfAlphaStar, StrategyKind::MfAStar}) {
        CHECK(coefficients::strategy_from_name(coefficients::strategy_name(k)) == k);
    }
    CHECK_THROWS_AS(coefficients::strategy_from_name("nope"), InvalidInput);
}
