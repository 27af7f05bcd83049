#include "mflr/coefficients.hpp"

#include <cmath>

namespace mflr::coefficients {

std::string strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::SingleFidelity: return "single-fidelity";
        case StrategyKind::MfMean: return "mf-mean";
        case StrategyKind::MfAlphaStar: return "mf-alpha-star";
        case StrategyKind::MfAStar: return "mf-a-star";
    }
    throw InvalidInput("unknown strategy kind");
}

StrategyKind strategy_from_name(const std::string& name) {
    if (name == "single-fidelity") return StrategyKind::SingleFidelity;
    if (name == "mf-mean") return StrategyKind::MfMean;
    if (name == "mf-alpha-star") return StrategyKind::MfAlphaStar;
    if (name == "mf-a-star") return StrategyKind::MfAStar;
    throw InvalidInput("unknown strategy '" + name +
                       "'; expected single-fidelity | mf-mean | mf-alpha-star | mf-a-star");
}

CoefficientStrategy single_fidelity() { return CoefficientStrategy{}; }

CoefficientStrategy mf_mean_alpha(const statistics::ModelStats& stats) {
    stats.validate();
    CoefficientStrategy s;
    s.kind = StrategyKind::MfMean;
    for (std::size_t k = 1; k < stats.fidelities; ++k) {
        if (!(stats.sigma[k] > 0.0)) {
            throw DegenerateStats("mf_mean_alpha: sigma_" + std::to_string(k + 1) + " is zero");
        }
        s.alphas.push_back(stats.rho[k] * stats.sigma[0] / stats.sigma[k]);
    }
    return s;
}

CoefficientStrategy mf_alpha_star(const statistics::ModelStats& stats) {
    stats.validate();
    if (!stats.has_matrices) {
        throw MissingMatrixStats("mf_alpha_star needs C_{1k}/C_{kk} statistics");
    }
    CoefficientStrategy s;
    s.kind = StrategyKind::MfAlphaStar;
    for (std::size_t k = 1; k < stats.fidelities; ++k) {
        const double t_kk = linalg::trace(stats.ckk[k]);
        if (!(t_kk > 0.0)) {
            throw DegenerateStats("mf_alpha_star: Tr(C_kk) <= 0 for k = " +
                                  std::to_string(k + 1));
        }
        s.alphas.push_back(linalg::trace(stats.c1k[k]) / t_kk);
    }
    return s;
}

CoefficientStrategy mf_A_star(const statistics::ModelStats& stats) {
    stats.validate();
    if (!stats.has_matrices) {
        throw MissingMatrixStats("mf_A_star needs C_{1k}/C_{kk} statistics");
    }
    CoefficientStrategy s;
    s.kind = StrategyKind::MfAStar;
    for (std::size_t k = 1; k < stats.fidelities; ++k) {
        const linalg::SymMatrix& ckk = stats.ckk[k];
        const linalg::GenMatrix c1k_t = stats.c1k[k].transposed();
        const std::size_t d = ckk.dim();
        // Solve C_kk X = C_1k^T column by column, then A = X^T. The pivot
        // floor makes rank-deficient sample covariances (pilot counts below
        // the feature dimension) refuse instead of factorizing noise.
        const linalg::CholeskyFactor chol(ckk, 1e-12);
        linalg::GenMatrix a(d, d);
        for (std::size_t col = 0; col < d; ++col) {
            linalg::Vector rhs(d);
            for (std::size_t i = 0; i < d; ++i) rhs[i] = c1k_t(i, col);
            const linalg::Vector x = chol.solve(rhs);
            for (std::size_t i = 0; i < d; ++i) a(col, i) = x[i];
        }
        s.matrices.push_back(std::move(a));
    }
    return s;
}

CoefficientStrategy strategy_coefficients(StrategyKind kind,
                                          const statistics::ModelStats& stats) {
    switch (kind) {
        case StrategyKind::SingleFidelity: return single_fidelity();
        case StrategyKind::MfMean: return mf_mean_alpha(stats);
        case StrategyKind::MfAlphaStar: return mf_alpha_star(stats);
        case StrategyKind::MfAStar: return mf_A_star(stats);
    }
    throw InvalidInput("unknown strategy kind");
}

namespace {

void require_bifidelity_matrices(const statistics::ModelStats& stats) {
    if (stats.fidelities != 2) {
        throw InvalidInput("closed-form estimator covariance is implemented for K = 2");
    }
    if (!stats.has_matrices) {
        throw MissingMatrixStats("closed-form covariance needs C_{ij} statistics");
    }
}

}  // namespace

linalg::SymMatrix scalar_estimator_covariance(const statistics::ModelStats& stats,
                                              double alpha, std::size_t m1, std::size_t m2) {
    require_bifidelity_matrices(stats);
    const double c = 1.0 / static_cast<double>(m1) - 1.0 / static_cast<double>(m2);
    const linalg::GenMatrix& c11 = stats.c1k[0];
    const linalg::GenMatrix& c12 = stats.c1k[1];
    const linalg::GenMatrix c22 = stats.ckk[1].as_general();

    linalg::GenMatrix cov = (1.0 / static_cast<double>(m1)) * c11;
    cov += c * (alpha * alpha) * c22;
    cov -= c * alpha * (c12 + c12.transposed());
    return linalg::SymMatrix::from_general(cov, 1e-9);
}

linalg::SymMatrix matrix_estimator_covariance(const statistics::ModelStats& stats,
                                              const linalg::GenMatrix& a, std::size_t m1,
                                              std::size_t m2) {
    require_bifidelity_matrices(stats);
    const double c = 1.0 / static_cast<double>(m1) - 1.0 / static_cast<double>(m2);
    const linalg::GenMatrix& c11 = stats.c1k[0];
    const linalg::GenMatrix& c12 = stats.c1k[1];
    const linalg::GenMatrix c22 = stats.ckk[1].as_general();

    const linalg::GenMatrix c12at = c12 * a.transposed();
    linalg::GenMatrix cov = (1.0 / static_cast<double>(m1)) * c11;
    cov += c * (a * c22 * a.transposed());
    cov -= c * (c12at + c12at.transposed());
    return linalg::SymMatrix::from_general(cov, 1e-9);
}

}  // namespace mflr::coefficients
