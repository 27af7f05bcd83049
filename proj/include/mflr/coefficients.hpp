#pragma once

#include <string>
#include <vector>

#include "mflr/linalg.hpp"
#include "mflr/statistics.hpp"

namespace mflr::coefficients {

enum class StrategyKind { SingleFidelity, MfMean, MfAlphaStar, MfAStar };

std::string strategy_name(StrategyKind kind);
StrategyKind strategy_from_name(const std::string& name);

/// Control variate coefficients: K-1 scalars for the scalar strategies, K-1
/// d x d matrices for the matrix strategy, nothing for single-fidelity.
struct CoefficientStrategy {
    StrategyKind kind = StrategyKind::SingleFidelity;
    std::vector<double> alphas;            // index k-2
    std::vector<linalg::GenMatrix> matrices;
};

CoefficientStrategy single_fidelity();

/// alpha_k = rho_{1k} sigma_1 / sigma_k. Needs only scalar statistics.
CoefficientStrategy mf_mean_alpha(const statistics::ModelStats& stats);

/// alpha_k* = Tr(C_{1k}) / Tr(C_{kk}).
CoefficientStrategy mf_alpha_star(const statistics::ModelStats& stats);

/// A_k* = C_{1k} C_{kk}^{-1}, computed by solving C_{kk} X = C_{1k}^T and
/// transposing rather than forming an inverse. Refuses (NotPositiveDefinite)
/// when the estimated C_{kk} is singular, e.g. pilot sample counts below the
/// feature dimension; silently regularizing would hide exactly the failure
/// mode that makes this strategy unreliable with poor statistics.
CoefficientStrategy mf_A_star(const statistics::ModelStats& stats);

CoefficientStrategy strategy_coefficients(StrategyKind kind,
                                          const statistics::ModelStats& stats);

/// Closed-form autocovariance of the bifidelity estimator with scalar
/// coefficient:
///   (1/m1) C11 + (1/m1 - 1/m2) (alpha^2 C22 - alpha C12 - alpha C21).
/// Bifidelity statistics (K = 2) only.
linalg::SymMatrix scalar_estimator_covariance(const statistics::ModelStats& stats,
                                              double alpha, std::size_t m1, std::size_t m2);

/// Matrix-coefficient counterpart:
///   (1/m1) C11 + (1/m1 - 1/m2) (A C22 A^T - C12 A^T - A C21).
linalg::SymMatrix matrix_estimator_covariance(const statistics::ModelStats& stats,
                                              const linalg::GenMatrix& a, std::size_t m1,
                                              std::size_t m2);

}  // namespace mflr::coefficients
