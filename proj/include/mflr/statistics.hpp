#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mflr/features.hpp"
#include "mflr/linalg.hpp"
#include "mflr/models.hpp"
#include "mflr/nested_samples.hpp"

namespace mflr::statistics {

/// Second-order model statistics used by the coefficient and allocation rules.
/// sigma[k-1] is the standard deviation of f^(k)(Z); rho[k-1] the Pearson
/// correlation of f^(k)(Z) with f^(1)(Z) (rho[0] = 1). The matrix block holds
/// C_{1k} = Cov[g^(1), g^(k)] and C_{kk} = Cov[g^(k), g^(k)] for the
/// feature-weighted outputs g^(k)(z) = x(z) f^(k)(z); it is present only when
/// the estimator had enough data to form it.
struct ModelStats {
    std::size_t fidelities = 0;
    std::vector<double> sigma;
    std::vector<double> rho;
    std::vector<linalg::GenMatrix> c1k;  // index k-1, so c1k[0] = C_11
    std::vector<linalg::SymMatrix> ckk;
    bool has_matrices = false;
    std::string provenance;

    void validate() const;
};

/// Draws n_pilot i.i.d. inputs, evaluates every fidelity on all of them
/// (charging the ledger), and forms sample statistics with the 1/(n-1)
/// convention throughout. Deterministic given the seed.
ModelStats pilot_stats(const models::ModelSet& set, const features::FeatureMap& map,
                       const features::InputDistribution& dist, std::size_t n_pilot,
                       std::uint64_t seed, models::CostLedger& ledger);

/// Closed-form statistics of the exponential pair over U(0,5) with the
/// quadratic feature map (1, z, z^2). Every moment E[z^a e^{bz}] is computed
/// from the exact antiderivative recursion, so the result carries full double
/// precision.
ModelStats exact_stats_exp();

/// Same estimators as pilot_stats over already-evaluated data; no model
/// evaluation, no cost. Uses the common input prefix of length m_1, which
/// must be >= 2 and carry every fidelity.
ModelStats stats_from_dataset(const estimators::NestedSampleSet& data,
                              const features::FeatureMap& map);

/// Moments of the exponential pair's building blocks, exposed for the exact
/// statistics and the analytic-example oracle on C_XY:
/// exp_moment(a, b) = E[Z^a e^{b Z}], Z ~ U(0,5).
double exp_moment(int a, double b);
/// Exact C_XY = E[x(Z) f1(Z)] for the quadratic map on the exponential pair.
linalg::Vector exact_cxy_exp();

}  // namespace mflr::statistics
