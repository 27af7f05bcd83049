#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mflr/features.hpp"
#include "mflr/linalg.hpp"

namespace mflr::models {

/// Tracks per-fidelity evaluation counts. The realized cost is reconstructed
/// as sum_k count_k * w_k in fixed fidelity order, so the total is exact and
/// independent of the interleaving of concurrent increments.
class CostLedger {
public:
    explicit CostLedger(std::vector<double> costs);
    CostLedger(const CostLedger&) = delete;
    CostLedger& operator=(const CostLedger&) = delete;

    void charge(std::size_t fidelity, std::uint64_t n = 1);
    std::uint64_t count(std::size_t fidelity) const;
    double total() const;
    std::size_t fidelities() const { return costs_.size(); }

private:
    std::vector<double> costs_;
    std::unique_ptr<std::atomic<std::uint64_t>[]> counts_;
};

using Evaluator = std::function<double(const linalg::Vector&)>;

/// Ordered fidelity hierarchy. Index 1 is the high-fidelity reference and
/// costs decrease strictly with the fidelity index.
class ModelSet {
public:
    ModelSet(std::string name, std::vector<Evaluator> evaluators, std::vector<double> costs);

    const std::string& name() const { return name_; }
    std::size_t fidelities() const { return evaluators_.size(); }
    double cost(std::size_t fidelity) const;
    const std::vector<double>& costs() const { return costs_; }

    /// Evaluates f^(k)(z) and charges the ledger exactly w_k.
    double evaluate(std::size_t fidelity, const linalg::Vector& z, CostLedger& ledger) const;
    std::vector<double> evaluate_batch(std::size_t fidelity, std::span<const linalg::Vector> zs,
                                       CostLedger& ledger) const;

private:
    std::string name_;
    std::vector<Evaluator> evaluators_;
    std::vector<double> costs_;
};

/// Analytic pair f1(z) = 8 e^z, f2(z) = 7.2 e^{z/2} with costs (1, 0.001).
ModelSet exp_pair();
features::InputDistribution exp_input_distribution();  // U(0,5)
features::FeatureMap exp_default_features();           // 1, z, z^2

/// 1D steady convection-diffusion-reaction stand-in pair. Each evaluator
/// solves kappa u'' - U u' + s(u, z) = 0 on [0,1] by damped Newton at its
/// grid size, with an Arrhenius source
///   s(u, z) = source_scale * (A_pe / 1e12) * phi * exp(-activation_scale * E / u)
/// and Dirichlet data u(0) = T_wall, u(1) = T_inlet from the inputs
/// z = (A_pe, E, T_inlet, T_wall, phi). The quantity of interest is the
/// maximum temperature over the grid. Costs are proportional to grid size:
/// w = (1, coarse_cells / fine_cells).
struct CdrConfig {
    int fine_cells = 128;    // intervals of the fine grid
    int coarse_cells = 8;    // intervals of the coarse grid
    double kappa = 0.05;     // diffusivity
    double velocity = 1.0;   // convection speed
    double source_scale = 150.0;
    double activation_scale = 1.0;
    double newton_tol = 1e-8;    // residual max-norm at the solution
    int newton_max_iter = 50;
    int newton_max_backtracks = 31;
};

void validate(const CdrConfig& cfg);

ModelSet cdr_pair(const CdrConfig& cfg = {});
features::InputDistribution cdr_input_distribution();
/// Full quadratic map on the five inputs (d = 21), standardized to [-1,1]
/// over the input box; raw CDR coordinate scales (up to 1.5e12) would
/// otherwise wreck the conditioning of C_XX.
features::FeatureMap cdr_default_features();

/// Grid solution introspection for convergence and residual tests.
struct CdrSolution {
    std::vector<double> temperature;  // cells+1 grid values including boundaries
    int iterations = 0;
    double residual_norm = 0.0;  // max-norm of the interior residual
};
CdrSolution cdr_solve(const CdrConfig& cfg, int cells, const linalg::Vector& z);

struct ModelFamily {
    ModelSet models;
    features::InputDistribution distribution;
    features::FeatureMap feature_map;
};

/// Built-in families addressable by name: "exp", "cdr1d".
ModelFamily family_by_name(const std::string& name, const CdrConfig& cdr_cfg = {});
std::vector<std::string> family_names();

}  // namespace mflr::models
