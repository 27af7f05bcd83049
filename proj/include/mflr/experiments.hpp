#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mflr/allocation.hpp"
#include "mflr/coefficients.hpp"
#include "mflr/estimators.hpp"
#include "mflr/models.hpp"
#include "mflr/statistics.hpp"

namespace mflr::experiments {

/// Tabulated multifidelity dataset: CSV with header z1..zp, y1..yK, one row
/// per common input, every fidelity evaluated on every row.
class DatasetSource {
public:
    static DatasetSource load(const std::string& path);

    std::size_t rows() const { return inputs_.size(); }
    std::size_t input_dim() const { return input_dim_; }
    std::size_t fidelities() const { return fidelity_count_; }
    const std::vector<linalg::Vector>& inputs() const { return inputs_; }
    double output(std::size_t fidelity, std::size_t row) const {
        return outputs_[fidelity - 1][row];
    }

    /// The whole table as a nested set with m_k = rows for every k.
    estimators::NestedSampleSet full_table(const features::FeatureMap& map) const;

    /// Seeded nested subset: shuffles the common row index (or draws it with
    /// replacement when bootstrap = true), takes the first m_K rows, and lets
    /// fidelity k use the first m_k of them. Throws InsufficientRows when
    /// m_K exceeds the table without replacement.
    estimators::NestedSampleSet subset(const features::FeatureMap& map,
                                       const std::vector<std::size_t>& counts, rng::Rng& gen,
                                       bool bootstrap) const;

    /// Per-coordinate [min, max] over the rows.
    std::pair<linalg::Vector, linalg::Vector> bounding_box() const;

private:
    std::size_t input_dim_ = 0;
    std::size_t fidelity_count_ = 0;
    std::vector<linalg::Vector> inputs_;
    std::vector<std::vector<double>> outputs_;  // outputs_[k-1][row]
};

DatasetSource load_dataset(const std::string& path);

enum class StatsMode { Exact, Pilot, Dataset, Provided };
enum class CxxMode { Exact, Sample };

struct ExperimentPlan {
    // Data source: a built-in generative family or a tabulated dataset.
    std::string family;  // "exp" | "cdr1d"; empty when dataset_path is set
    std::string dataset_path;
    models::CdrConfig cdr;
    std::vector<double> dataset_costs;  // required in dataset mode

    std::vector<double> budgets;
    std::vector<coefficients::StrategyKind> strategies;

    StatsMode stats_mode = StatsMode::Exact;
    std::size_t n_pilot = 100;
    bool reuse_pilot = false;
    /// Used when stats_mode == Provided: externally computed statistics (e.g.
    /// loaded from a stats JSON file) treated as known.
    std::optional<statistics::ModelStats> provided_stats;
    std::string provided_stats_label;

    CxxMode cxx_mode = CxxMode::Exact;
    std::size_t cxx_samples = 100000;

    std::size_t replications = 500;
    std::uint64_t base_seed = 1;
    std::size_t workers = 1;
    bool bootstrap_with_replacement = false;
    bool standardize_features = false;  // generative families; cdr1d forces this on

    /// Prediction evaluation points; defaults to z = 5 for the exp family and
    /// the reference point (5.5e11, 6000, 300, 925, 1) for five-input CDR data.
    std::vector<linalg::Vector> eval_points;

    allocation::AllocateOptions allocate_options;
};

struct PredictionSummary {
    linalg::Vector point;
    double mean = 0.0;
    double variance = 0.0;
};

/// Aggregates for one (budget, strategy) cell plus the raw per-replication
/// estimates the aggregates were reduced from (kept in memory for CSV export
/// and resampling; not serialized into report.json).
struct CellResult {
    double budget = 0.0;
    coefficients::StrategyKind strategy;

    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::string first_failure;

    bool allocation_fixed = true;
    std::vector<std::size_t> allocation_counts;  // fixed-mode counts (or first success)
    std::vector<double> allocation_mean;
    std::vector<double> allocation_rel_std;  // std/mean per fidelity (pilot mode)
    double mean_realized_cost = 0.0;

    linalg::Vector mean_cxy, mean_beta;
    linalg::SymMatrix cov_cxy, cov_beta;
    double tr_cov_cxy = 0.0, tr_cov_beta = 0.0;
    std::vector<PredictionSummary> predictions;

    std::vector<char> rep_ok;
    std::vector<linalg::Vector> rep_cxy;
    std::vector<linalg::Vector> rep_beta;
    std::vector<std::vector<double>> rep_pred;  // [rep][point]
};

struct AllocationVariation {
    std::vector<double> budgets;
    // per budget, per fidelity
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<double>> rel_std;  // std/mean
};

struct ExperimentReport {
    std::uint64_t base_seed = 0;
    std::size_t replications = 0;
    std::vector<double> budgets;
    std::vector<coefficients::StrategyKind> strategies;
    std::vector<linalg::Vector> eval_points;
    std::vector<CellResult> cells;  // budget-major, strategy-minor
    double training_cost = 0.0;
    double pilot_cost = 0.0;
    std::optional<AllocationVariation> pilot_allocation_variation;
    std::string plan_echo_json;  // resolved plan without execution-only keys

    const CellResult& cell(double budget, coefficients::StrategyKind strategy) const;

    std::string to_json() const;
    std::string trace_cov_csv() const;
    std::string estimates_csv() const;
    /// Writes report.json, trace_cov.csv, estimates.csv into dir.
    void write_files(const std::string& dir) const;
};

/// Runs the replication study. Per replication r with seed derived from
/// (base_seed, r): re-estimate statistics if in pilot mode, allocate, draw one
/// nested data realization per budget, and fit every strategy on that same
/// realization. A replication whose matrix strategy fails (singular C_kk) is
/// recorded as failed for that strategy only. Results are bit-identical for
/// any worker count.
ExperimentReport run_experiment(const ExperimentPlan& plan);

/// Spread of the pilot-estimated allocation: std/mean of each m_k across R
/// independent pilot re-estimations of size n_pilot.
AllocationVariation allocation_variation(const ExperimentPlan& plan, std::size_t n_pilot,
                                         std::size_t replications);

}  // namespace mflr::experiments
