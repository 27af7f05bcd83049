#include "mflr/estimators.hpp"

#include <string>

namespace mflr::estimators {

namespace {

// (1/m) sum_{i<m} x_i * y_i, left-to-right.
linalg::Vector weighted_block(const NestedSampleSet& data, std::size_t fidelity_index,
                              std::size_t m) {
    const std::size_t d = data.feature_dim();
    linalg::Vector acc(d);
    const std::vector<double>& y = data.outputs[fidelity_index];
    for (std::size_t i = 0; i < m; ++i) {
        const linalg::Vector& x = data.feature_columns[i];
        const double yi = y[i];
        for (std::size_t j = 0; j < d; ++j) acc[j] += x[j] * yi;
    }
    acc *= 1.0 / static_cast<double>(m);
    return acc;
}

void require_counts(const NestedSampleSet& data, std::size_t expected_coeffs,
                    std::size_t actual_coeffs, const char* what) {
    data.validate();
    if (expected_coeffs != actual_coeffs) {
        throw CountMismatch(std::string(what) + ": " + std::to_string(actual_coeffs) +
                            " coefficients for K = " + std::to_string(data.fidelities()));
    }
}

}  // namespace

linalg::Vector sf_cxy(const NestedSampleSet& data) {
    data.validate();
    if (data.counts.front() < 1) throw EmptyInput("sf_cxy: no high-fidelity samples");
    return weighted_block(data, 0, data.counts.front());
}

linalg::Vector mf_cxy_scalar(const NestedSampleSet& data,
                             const coefficients::CoefficientStrategy& strategy) {
    require_counts(data, data.fidelities() - 1, strategy.alphas.size(), "mf_cxy_scalar");
    linalg::Vector estimate = sf_cxy(data);
    for (std::size_t k = 1; k < data.fidelities(); ++k) {
        if (data.counts[k] == data.counts[k - 1]) continue;  // correction is exactly zero
        linalg::Vector corr = weighted_block(data, k, data.counts[k]);
        corr -= weighted_block(data, k, data.counts[k - 1]);
        corr *= strategy.alphas[k - 1];
        estimate += corr;
    }
    return estimate;
}

linalg::Vector mf_cxy_matrix(const NestedSampleSet& data,
                             const coefficients::CoefficientStrategy& strategy) {
    require_counts(data, data.fidelities() - 1, strategy.matrices.size(), "mf_cxy_matrix");
    const std::size_t d = data.feature_dim();
    linalg::Vector estimate = sf_cxy(data);
    for (std::size_t k = 1; k < data.fidelities(); ++k) {
        const linalg::GenMatrix& a = strategy.matrices[k - 1];
        if (a.rows() != d || a.cols() != d) {
            throw DimensionMismatch("mf_cxy_matrix: A_" + std::to_string(k + 1) + " is " +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    ", expected " + std::to_string(d) + "x" +
                                    std::to_string(d));
        }
        if (data.counts[k] == data.counts[k - 1]) continue;
        linalg::Vector corr = weighted_block(data, k, data.counts[k]);
        corr -= weighted_block(data, k, data.counts[k - 1]);
        estimate += a * corr;
    }
    return estimate;
}

FitResult fit(const NestedSampleSet& data, const coefficients::CoefficientStrategy& strategy,
              const linalg::SymMatrix& c_xx) {
    FitResult result;
    result.strategy = strategy.kind;
    result.counts = data.counts;
    switch (strategy.kind) {
        case coefficients::StrategyKind::SingleFidelity:
            result.c_xy_hat = sf_cxy(data);
            break;
        case coefficients::StrategyKind::MfMean:
        case coefficients::StrategyKind::MfAlphaStar:
            result.c_xy_hat = mf_cxy_scalar(data, strategy);
            break;
        case coefficients::StrategyKind::MfAStar:
            result.c_xy_hat = mf_cxy_matrix(data, strategy);
            break;
    }
    result.beta_hat = linalg::spd_solve(c_xx, result.c_xy_hat);
    return result;
}

double predict(const FitResult& fit, const features::FeatureMap& map,
               const linalg::Vector& z) {
    const linalg::Vector x = map.eval(z);
    if (x.dim() != fit.beta_hat.dim()) {
        throw DimensionMismatch("predict: feature dim " + std::to_string(x.dim()) +
                                " vs beta dim " + std::to_string(fit.beta_hat.dim()));
    }
    return x.dot(fit.beta_hat);
}

double mfmc_mean(const NestedSampleSet& data,
                 const coefficients::CoefficientStrategy& strategy) {
    data.validate();
    if (strategy.alphas.size() != data.fidelities() - 1) {
        throw CountMismatch("mfmc_mean: coefficient count vs K");
    }
    auto block_mean = [&](std::size_t k, std::size_t m) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += data.outputs[k][i];
        return acc / static_cast<double>(m);
    };
    double estimate = block_mean(0, data.counts.front());
    for (std::size_t k = 1; k < data.fidelities(); ++k) {
        if (data.counts[k] == data.counts[k - 1]) continue;
        estimate += strategy.alphas[k - 1] *
                    (block_mean(k, data.counts[k]) - block_mean(k, data.counts[k - 1]));
    }
    return estimate;
}

}  // namespace mflr::estimators
