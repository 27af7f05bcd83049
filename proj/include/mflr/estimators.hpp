#pragma once

#include <cstdint>
#include <vector>

#include "mflr/coefficients.hpp"
#include "mflr/features.hpp"
#include "mflr/linalg.hpp"
#include "mflr/nested_samples.hpp"

namespace mflr::estimators {

/// Single-fidelity estimate (1/m_1) X_{m_1} Y^(1)_{m_1}, high-fidelity data
/// only. Summation over the sample index is left-to-right so repeated runs
/// with the same seed reproduce bit-identical results.
linalg::Vector sf_cxy(const NestedSampleSet& data);

/// Scalar-coefficient multifidelity estimate:
///   (1/m_1) X_{m_1} Y^(1)_{m_1}
///     + sum_k alpha_k [ (1/m_k) X_{m_k} Y^(k)_{m_k}
///                       - (1/m_{k-1}) X_{m_{k-1}} Y^(k)_{m_{k-1}} ].
/// Both inner sums range over the same nested samples; the shorter term
/// reuses the first m_{k-1} inputs of fidelity k.
linalg::Vector mf_cxy_scalar(const NestedSampleSet& data,
                             const coefficients::CoefficientStrategy& strategy);

/// Matrix-coefficient variant with d x d weights A_k on the correction terms.
linalg::Vector mf_cxy_matrix(const NestedSampleSet& data,
                             const coefficients::CoefficientStrategy& strategy);

struct FitResult {
    linalg::Vector c_xy_hat;
    linalg::Vector beta_hat;
    coefficients::StrategyKind strategy = coefficients::StrategyKind::SingleFidelity;
    std::vector<std::size_t> counts;
    double realized_cost = 0.0;
    bool standardized_features = false;
    std::uint64_t seed = 0;
};

/// Dispatches on the strategy kind and solves beta = C_XX^{-1} c_xy via the
/// SPD solver. c_xx must be symmetric positive definite.
FitResult fit(const NestedSampleSet& data, const coefficients::CoefficientStrategy& strategy,
              const linalg::SymMatrix& c_xx);

/// x(z)^T beta.
double predict(const FitResult& fit, const features::FeatureMap& map, const linalg::Vector& z);

/// Scalar multifidelity mean estimator over the nested outputs; the d = 1
/// constant-feature reduction of the covariance estimator.
double mfmc_mean(const NestedSampleSet& data,
                 const coefficients::CoefficientStrategy& strategy);

}  // namespace mflr::estimators
