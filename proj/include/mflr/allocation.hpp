#pragma once

#include <span>
#include <string>
#include <vector>

#include "mflr/statistics.hpp"

namespace mflr::allocation {

/// Per-fidelity sample counts with the budget they were produced for.
/// Counts are nondecreasing in the fidelity index and realized_cost stays
/// within one w_K of the budget for allocations produced by allocate().
struct Allocation {
    std::vector<std::size_t> counts;
    double budget = 0.0;
    double realized_cost = 0.0;
};

struct AllocateOptions {
    /// The correlation denominator of the rate r_k is (1 - rho_{1,k}^2) by
    /// default; this switches to the (1 - rho_{1,2}^2) form used by the
    /// original mean-estimator allocation. Identical for K = 2.
    bool original_denominator = false;
};

/// Budget-to-counts rule: r_1 = 1,
///   r_k = sqrt( w_1 (rho_{1,k}^2 - rho_{1,k+1}^2) / (w_k (1 - rho_{1,k}^2)) ),
/// with rho_{1,K+1} = 0; m_1 = floor(p / w^T r) (clamped to >= 1) and
/// m_k = floor(m_1^real r_k) from the unfloored m_1. Floors keep the realized
/// cost within budget; a monotonicity repair then enforces m_k >= m_{k-1}.
Allocation allocate(const statistics::ModelStats& stats, std::span<const double> costs,
                    double budget, const AllocateOptions& options = {});

struct ValidatedAllocation {
    Allocation allocation;
    std::vector<std::string> warnings;
};

/// Checks a user-supplied allocation (monotone counts, m_1 >= 1) and computes
/// its realized cost. Never modifies the counts. Equal consecutive counts are
/// legal but the corresponding correction term vanishes, which is reported as
/// a warning.
ValidatedAllocation validate_allocation(std::span<const std::size_t> counts,
                                        std::span<const double> costs, double budget);

double realized_cost(std::span<const std::size_t> counts, std::span<const double> costs);

}  // namespace mflr::allocation
