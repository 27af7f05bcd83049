#include "mflr/nested_samples.hpp"

#include <string>

namespace mflr::estimators {

void NestedSampleSet::validate() const {
    if (counts.empty()) throw CountMismatch("NestedSampleSet: no fidelities");
    for (std::size_t k = 1; k < counts.size(); ++k) {
        if (counts[k] < counts[k - 1]) {
            throw NonNestedData("counts must be nondecreasing, m_" + std::to_string(k) + "=" +
                                std::to_string(counts[k - 1]) + " > m_" +
                                std::to_string(k + 1) + "=" + std::to_string(counts[k]));
        }
    }
    if (inputs.size() != counts.back()) {
        throw CountMismatch("NestedSampleSet: " + std::to_string(inputs.size()) +
                            " inputs vs m_K = " + std::to_string(counts.back()));
    }
    if (feature_columns.size() != inputs.size()) {
        throw CountMismatch("NestedSampleSet: feature column count mismatch");
    }
    if (outputs.size() != counts.size()) {
        throw CountMismatch("NestedSampleSet: output lists vs fidelity count");
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (outputs[k].size() != counts[k]) {
            throw CountMismatch("NestedSampleSet: fidelity " + std::to_string(k + 1) + " has " +
                                std::to_string(outputs[k].size()) + " outputs, expected " +
                                std::to_string(counts[k]));
        }
    }
}

NestedSampleSet sample_nested(const models::ModelSet& set, const features::FeatureMap& map,
                              const features::InputDistribution& dist,
                              const std::vector<std::size_t>& counts, rng::Rng& gen,
                              models::CostLedger& ledger) {
    if (counts.size() != set.fidelities()) {
        throw CountMismatch("sample_nested: " + std::to_string(counts.size()) +
                            " counts vs K = " + std::to_string(set.fidelities()));
    }
    NestedSampleSet data;
    data.counts = counts;
    const std::size_t m_last = counts.back();
    data.inputs.reserve(m_last);
    data.feature_columns.reserve(m_last);
    for (std::size_t i = 0; i < m_last; ++i) {
        data.inputs.push_back(dist.draw(gen));
        data.feature_columns.push_back(map.eval(data.inputs.back()));
    }
    data.outputs.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
        data.outputs[k].reserve(counts[k]);
        for (std::size_t i = 0; i < counts[k]; ++i) {
            data.outputs[k].push_back(set.evaluate(k + 1, data.inputs[i], ledger));
        }
    }
    data.validate();
    return data;
}

}  // namespace mflr::estimators
