#pragma once

#include <cstdint>
#include <vector>

#include "mflr/features.hpp"
#include "mflr/linalg.hpp"
#include "mflr/models.hpp"

namespace mflr::estimators {

/// Nested per-fidelity training data. The input list has m_K entries; fidelity
/// k's dataset is the prefix of length counts[k-1], so the first m_1 inputs
/// are evaluated by every model. Counts are nondecreasing in the fidelity
/// index.
struct NestedSampleSet {
    std::vector<std::size_t> counts;               // m_1 .. m_K
    std::vector<linalg::Vector> inputs;            // z_1 .. z_{m_K}
    std::vector<linalg::Vector> feature_columns;   // x(z_i), i = 1 .. m_K
    std::vector<std::vector<double>> outputs;      // outputs[k-1] has m_k entries

    std::size_t fidelities() const { return counts.size(); }
    std::size_t feature_dim() const {
        return feature_columns.empty() ? 0 : feature_columns.front().dim();
    }

    /// Enforces the structural invariants; throws NonNestedData / CountMismatch.
    void validate() const;
};

/// Draws m_K fresh inputs and evaluates model k on the first m_k of them,
/// charging the ledger. Inputs are shared across fidelities (nested by
/// construction).
NestedSampleSet sample_nested(const models::ModelSet& set, const features::FeatureMap& map,
                              const features::InputDistribution& dist,
                              const std::vector<std::size_t>& counts, rng::Rng& gen,
                              models::CostLedger& ledger);

}  // namespace mflr::estimators
