#include "mflr/allocation.hpp"

#include <cmath>

namespace mflr::allocation {

double realized_cost(std::span<const std::size_t> counts, std::span<const double> costs) {
    if (counts.size() != costs.size()) {
        throw CountMismatch("realized_cost: " + std::to_string(counts.size()) +
                            " counts vs " + std::to_string(costs.size()) + " costs");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        acc += static_cast<double>(counts[k]) * costs[k];
    }
    return acc;
}

Allocation allocate(const statistics::ModelStats& stats, std::span<const double> costs,
                    double budget, const AllocateOptions& options) {
    stats.validate();
    const std::size_t k_count = stats.fidelities;
    if (costs.size() != k_count) {
        throw CountMismatch("allocate: " + std::to_string(costs.size()) + " costs vs K = " +
                            std::to_string(k_count));
    }
    for (std::size_t k = 0; k < k_count; ++k) {
        if (!(costs[k] > 0.0)) throw InvalidInput("allocate: costs must be positive");
        if (k > 0 && !(costs[k - 1] > costs[k])) {
            throw InvalidInput("allocate: costs must strictly decrease with fidelity");
        }
    }
    if (budget < costs[0]) {
        throw BudgetTooSmall("budget " + std::to_string(budget) +
                             " cannot afford one high-fidelity sample of cost " +
                             std::to_string(costs[0]));
    }
    // 1 = rho_{1,1} > rho_{1,2}^2-ordering must be strict for the rates to be
    // well defined.
    for (std::size_t k = 1; k < k_count; ++k) {
        const double prev = stats.rho[k - 1] * stats.rho[k - 1];
        const double cur = stats.rho[k] * stats.rho[k];
        if (!(prev > cur)) {
            throw InvalidCorrelationOrdering(
                "rho_{1," + std::to_string(k) + "}^2 = " + std::to_string(prev) +
                " must exceed rho_{1," + std::to_string(k + 1) + "}^2 = " +
                std::to_string(cur));
        }
    }

    std::vector<double> rate(k_count, 1.0);
    for (std::size_t k = 1; k < k_count; ++k) {
        const double rho_k2 = stats.rho[k] * stats.rho[k];
        const double rho_next2 = (k + 1 < k_count) ? stats.rho[k + 1] * stats.rho[k + 1] : 0.0;
        const double denom_rho = options.original_denominator
                                     ? 1.0 - stats.rho[1] * stats.rho[1]
                                     : 1.0 - rho_k2;
        if (!(denom_rho > 0.0)) {
            throw InvalidCorrelationOrdering("allocation rate denominator is not positive");
        }
        rate[k] = std::sqrt(costs[0] * (rho_k2 - rho_next2) / (costs[k] * denom_rho));
    }

    double weighted = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) weighted += costs[k] * rate[k];
    const double m1_real = budget / weighted;

    Allocation alloc;
    alloc.budget = budget;
    alloc.counts.resize(k_count);
    alloc.counts[0] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(m1_real)));
    for (std::size_t k = 1; k < k_count; ++k) {
        alloc.counts[k] = static_cast<std::size_t>(std::floor(m1_real * rate[k]));
        if (alloc.counts[k] < alloc.counts[k - 1]) alloc.counts[k] = alloc.counts[k - 1];
    }
    alloc.realized_cost = realized_cost(alloc.counts, costs);
    if (alloc.realized_cost > budget + costs.back()) {
        throw BudgetTooSmall("allocation repair exceeded budget: realized " +
                             std::to_string(alloc.realized_cost) + " vs budget " +
                             std::to_string(budget));
    }
    return alloc;
}

ValidatedAllocation validate_allocation(std::span<const std::size_t> counts,
                                        std::span<const double> costs, double budget) {
    if (counts.empty()) throw InvalidInput("validate_allocation: no counts");
    if (counts[0] < 1) {
        throw ZeroHighFidelity("an unbiased estimator needs at least one high-fidelity sample");
    }
    ValidatedAllocation out;
    for (std::size_t k = 1; k < counts.size(); ++k) {
        if (counts[k] < counts[k - 1]) {
            throw NonMonotoneAllocation("m_" + std::to_string(k + 1) + " = " +
                                        std::to_string(counts[k]) + " < m_" +
                                        std::to_string(k) + " = " +
                                        std::to_string(counts[k - 1]));
        }
        if (counts[k] == counts[k - 1]) {
            out.warnings.push_back("m_" + std::to_string(k) + " == m_" +
                                   std::to_string(k + 1) + " = " + std::to_string(counts[k]) +
                                   ": the fidelity-" + std::to_string(k + 1) +
                                   " correction term vanishes");
        }
    }
    out.allocation.counts.assign(counts.begin(), counts.end());
    out.allocation.budget = budget;
    out.allocation.realized_cost = realized_cost(counts, costs);
    return out;
}

}  // namespace mflr::allocation
