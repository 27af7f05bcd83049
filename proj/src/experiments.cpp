#include "mflr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace mflr::experiments {

using coefficients::CoefficientStrategy;
using coefficients::StrategyKind;
using estimators::NestedSampleSet;
using linalg::GenMatrix;
using linalg::SymMatrix;
using linalg::Vector;

// ---------------------------------------------------------------------------
// DatasetSource

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        // trim surrounding whitespace
        const auto a = field.find_first_not_of(" \t\r");
        const auto b = field.find_last_not_of(" \t\r");
        fields.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace

DatasetSource DatasetSource::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw FormatError("dataset '" + path + "' is empty");
    const std::vector<std::string> header = split_csv_line(line);

    DatasetSource ds;
    std::size_t zi = 0;
    while (zi < header.size() && header[zi] == "z" + std::to_string(zi + 1)) ++zi;
    std::size_t yi = 0;
    while (zi + yi < header.size() && header[zi + yi] == "y" + std::to_string(yi + 1)) ++yi;
    if (zi == 0 || yi == 0 || zi + yi != header.size()) {
        throw FormatError("dataset header must be z1..zp,y1..yK, got '" + line + "'");
    }
    ds.input_dim_ = zi;
    ds.fidelity_count_ = yi;
    ds.outputs_.resize(yi);

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != zi + yi) {
            throw FormatError("dataset row " + std::to_string(row) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(zi + yi));
        }
        Vector z(zi);
        try {
            for (std::size_t c = 0; c < zi; ++c) z[c] = std::stod(fields[c]);
            for (std::size_t k = 0; k < yi; ++k) {
                ds.outputs_[k].push_back(std::stod(fields[zi + k]));
            }
        } catch (const std::exception&) {
            throw FormatError("dataset row " + std::to_string(row) + " has a non-numeric field");
        }
        ds.inputs_.push_back(std::move(z));
    }
    if (ds.inputs_.empty()) throw FormatError("dataset '" + path + "' has no data rows");
    return ds;
}

DatasetSource load_dataset(const std::string& path) { return DatasetSource::load(path); }

NestedSampleSet DatasetSource::full_table(const features::FeatureMap& map) const {
    NestedSampleSet data;
    data.counts.assign(fidelity_count_, rows());
    data.inputs = inputs_;
    data.feature_columns.reserve(rows());
    for (const Vector& z : inputs_) data.feature_columns.push_back(map.eval(z));
    data.outputs = outputs_;
    data.validate();
    return data;
}

NestedSampleSet DatasetSource::subset(const features::FeatureMap& map,
                                      const std::vector<std::size_t>& counts, rng::Rng& gen,
                                      bool bootstrap) const {
    if (counts.size() != fidelity_count_) {
        throw CountMismatch("dataset subset: " + std::to_string(counts.size()) +
                            " counts vs K = " + std::to_string(fidelity_count_));
    }
    const std::size_t m_last = counts.back();
    std::vector<std::size_t> rows_drawn;
    if (bootstrap) {
        rows_drawn.reserve(m_last);
        for (std::size_t i = 0; i < m_last; ++i) {
            rows_drawn.push_back(static_cast<std::size_t>(gen.next_u64() % rows()));
        }
    } else {
        if (m_last > rows()) {
            throw InsufficientRows("requested m_K = " + std::to_string(m_last) + " from " +
                                   std::to_string(rows()) + " dataset rows");
        }
        // Partial Fisher-Yates: only the first m_last slots are needed.
        std::vector<std::size_t> idx(rows());
        for (std::size_t i = 0; i < rows(); ++i) idx[i] = i;
        for (std::size_t i = 0; i < m_last; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(gen.next_u64() % (rows() - i));
            std::swap(idx[i], idx[j]);
        }
        rows_drawn.assign(idx.begin(), idx.begin() + m_last);
    }

    NestedSampleSet data;
    data.counts = counts;
    data.inputs.reserve(m_last);
    data.feature_columns.reserve(m_last);
    for (std::size_t i : rows_drawn) {
        data.inputs.push_back(inputs_[i]);
        data.feature_columns.push_back(map.eval(inputs_[i]));
    }
    data.outputs.resize(fidelity_count_);
    for (std::size_t k = 0; k < fidelity_count_; ++k) {
        data.outputs[k].reserve(counts[k]);
        for (std::size_t i = 0; i < counts[k]; ++i) {
            data.outputs[k].push_back(outputs_[k][rows_drawn[i]]);
        }
    }
    data.validate();
    return data;
}

std::pair<Vector, Vector> DatasetSource::bounding_box() const {
    Vector lo(input_dim_), hi(input_dim_);
    for (std::size_t c = 0; c < input_dim_; ++c) {
        lo[c] = hi[c] = inputs_[0][c];
        for (const Vector& z : inputs_) {
            lo[c] = std::min(lo[c], z[c]);
            hi[c] = std::max(hi[c], z[c]);
        }
    }
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// Plan resolution

namespace {

struct Resolved {
    bool generative = true;
    std::optional<models::ModelFamily> family;
    std::optional<DatasetSource> dataset;
    features::FeatureMap map;
    std::vector<double> costs;
    SymMatrix c_xx;
    std::vector<Vector> eval_points;
    std::vector<Vector> eval_x;  // features of each eval point

    bool pilot_mode = false;
    std::optional<statistics::ModelStats> fixed_stats;
    // Per plan strategy: coefficients or the error that prevented them.
    std::vector<std::optional<CoefficientStrategy>> fixed_coeffs;
    std::vector<std::string> fixed_coeff_errors;
    // Per budget (only when a multifidelity strategy is present).
    std::vector<std::optional<allocation::Allocation>> fixed_allocs;
    std::vector<std::string> fixed_alloc_errors;
    bool any_mf = false;
    bool any_sf = false;
};

std::size_t sf_count(double budget, double w1) {
    return static_cast<std::size_t>(std::floor(budget / w1));
}

Resolved resolve(const ExperimentPlan& plan) {
    if (plan.replications < 2) throw InvalidInput("experiment needs replications >= 2");
    if (plan.budgets.empty()) throw InvalidInput("experiment needs at least one budget");
    for (double p : plan.budgets)
        if (!(p > 0.0)) throw InvalidInput("budgets must be positive");
    if (plan.strategies.empty()) throw InvalidInput("experiment needs at least one strategy");
    const bool have_family = !plan.family.empty();
    const bool have_dataset = !plan.dataset_path.empty();
    if (have_family == have_dataset) {
        throw InvalidInput("experiment needs exactly one of family or dataset");
    }

    Resolved r;
    for (StrategyKind s : plan.strategies) {
        (s == StrategyKind::SingleFidelity ? r.any_sf : r.any_mf) = true;
    }
    r.pilot_mode = plan.stats_mode == StatsMode::Pilot;

    if (have_family) {
        r.generative = true;
        r.family = models::family_by_name(plan.family, plan.cdr);
        r.map = r.family->feature_map;
        if (plan.standardize_features && !r.map.standardized()) {
            r.map.enable_standardization(r.family->distribution);
        }
        r.costs = r.family->models.costs();
        if (plan.cxx_mode == CxxMode::Exact) {
            r.c_xx = features::exact_cxx(r.map, r.family->distribution);
        } else {
            rng::Rng gen(rng::derive(plan.base_seed, 0x00c0ffee));
            std::vector<Vector> zs;
            zs.reserve(plan.cxx_samples);
            for (std::size_t i = 0; i < plan.cxx_samples; ++i) {
                zs.push_back(r.family->distribution.draw(gen));
            }
            r.c_xx = features::sample_cxx(r.map, zs);
        }
        r.eval_points = plan.eval_points;
        if (r.eval_points.empty()) {
            if (plan.family == "exp") {
                r.eval_points.push_back(Vector{5.0});
            } else if (plan.family == "cdr1d") {
                r.eval_points.push_back(Vector{5.5e11, 6000.0, 300.0, 925.0, 1.0});
            }
        }
        for (const Vector& z : r.eval_points) {
            if (z.dim() != r.family->distribution.dim()) {
                throw DimensionMismatch("evaluation point dimension vs input dimension");
            }
            for (std::size_t c = 0; c < z.dim(); ++c) {
                const auto& coord = r.family->distribution.coordinate(c);
                if (z[c] < coord.lo || z[c] > coord.hi) {
                    throw InvalidInput("evaluation point coordinate " + std::to_string(c) +
                                       " outside the distribution support");
                }
            }
        }
    } else {
        r.generative = false;
        r.dataset = DatasetSource::load(plan.dataset_path);
        if (plan.dataset_costs.size() != r.dataset->fidelities()) {
            throw InvalidInput("dataset mode needs one cost per fidelity (" +
                               std::to_string(r.dataset->fidelities()) + ")");
        }
        r.costs = plan.dataset_costs;
        // Standardize over the data bounding box; arbitrary dataset scales
        // would otherwise destroy the conditioning of C_XX.
        const auto [lo, hi] = r.dataset->bounding_box();
        std::vector<features::CoordinateRange> box;
        for (std::size_t c = 0; c < r.dataset->input_dim(); ++c) {
            box.push_back({features::Marginal::Uniform, lo[c], hi[c]});
        }
        const features::InputDistribution box_dist{box};
        r.map = features::FeatureMap::full_quadratic(r.dataset->input_dim());
        r.map.enable_standardization(box_dist);
        r.c_xx = features::sample_cxx(r.map, r.dataset->inputs());
        r.eval_points = plan.eval_points;
        if (r.eval_points.empty() && r.dataset->input_dim() == 5) {
            r.eval_points.push_back(Vector{5.5e11, 6000.0, 300.0, 925.0, 1.0});
        }
        for (const Vector& z : r.eval_points) {
            if (z.dim() != r.dataset->input_dim()) {
                throw DimensionMismatch("evaluation point dimension vs dataset input dimension");
            }
            for (std::size_t c = 0; c < z.dim(); ++c) {
                // The sample bounding box underestimates the true support, so
                // allow a small margin relative to the observed range.
                const double margin = 0.02 * (hi[c] - lo[c]);
                if (z[c] < lo[c] - margin || z[c] > hi[c] + margin) {
                    throw InvalidInput("evaluation point coordinate " + std::to_string(c) +
                                       " outside the dataset bounding box");
                }
            }
        }
    }
    for (const Vector& z : r.eval_points) r.eval_x.push_back(r.map.eval(z));

    // Fixed statistics (exact / dataset / provided) and everything derivable
    // from them.
    if (plan.stats_mode == StatsMode::Exact) {
        if (!have_family || plan.family != "exp") {
            throw InvalidInput("exact statistics are only available for the exp family; "
                               "use pilot, dataset, or provided statistics");
        }
        r.fixed_stats = statistics::exact_stats_exp();
    } else if (plan.stats_mode == StatsMode::Dataset) {
        if (!have_dataset) throw InvalidInput("dataset statistics need a dataset source");
        r.fixed_stats = statistics::stats_from_dataset(r.dataset->full_table(r.map), r.map);
    } else if (plan.stats_mode == StatsMode::Provided) {
        if (!plan.provided_stats) {
            throw InvalidInput("provided statistics mode needs a stats object");
        }
        plan.provided_stats->validate();
        r.fixed_stats = *plan.provided_stats;
    } else if (!have_family) {
        throw InvalidInput("pilot statistics need a generative family");
    }

    if (r.fixed_stats) {
        for (StrategyKind s : plan.strategies) {
            try {
                r.fixed_coeffs.push_back(coefficients::strategy_coefficients(s, *r.fixed_stats));
                r.fixed_coeff_errors.emplace_back();
            } catch (const Error& e) {
                r.fixed_coeffs.emplace_back();
                r.fixed_coeff_errors.emplace_back(e.what());
            }
        }
        for (double p : plan.budgets) {
            if (!r.any_mf) {
                r.fixed_allocs.emplace_back();
                r.fixed_alloc_errors.emplace_back();
                continue;
            }
            try {
                r.fixed_allocs.push_back(
                    allocation::allocate(*r.fixed_stats, r.costs, p, plan.allocate_options));
                r.fixed_alloc_errors.emplace_back();
            } catch (const Error& e) {
                r.fixed_allocs.emplace_back();
                r.fixed_alloc_errors.emplace_back(e.what());
            }
        }
        // Dataset subsampling cannot exceed the table without replacement.
        if (!r.generative && !plan.bootstrap_with_replacement) {
            for (std::size_t bi = 0; bi < plan.budgets.size(); ++bi) {
                std::size_t need = sf_count(plan.budgets[bi], r.costs[0]);
                if (r.fixed_allocs[bi]) need = std::max(need, r.fixed_allocs[bi]->counts.back());
                if (need > r.dataset->rows()) {
                    throw InsufficientRows(
                        "budget " + std::to_string(plan.budgets[bi]) + " needs " +
                        std::to_string(need) + " rows, dataset has " +
                        std::to_string(r.dataset->rows()));
                }
            }
        }
    }
    return r;
}

// Per-replication raw results for one cell.
struct Slot {
    bool ok = false;
    std::string error;
    Vector c_xy;
    Vector beta;
    std::vector<double> preds;
    std::vector<std::size_t> counts;
    double realized_cost = 0.0;
};

struct RepOutput {
    std::vector<Slot> slots;  // budget-major, strategy-minor
    std::vector<std::vector<std::size_t>> pilot_alloc;  // per budget (pilot mode)
};

// Shared nested draws for one (replication, budget): one input stream, the
// high-fidelity model evaluated on max(m_1, n_sf) inputs, lower fidelities on
// their m_k. Every strategy consumes the same prefix.
struct Bundle {
    std::vector<Vector> inputs;
    std::vector<Vector> xcols;
    std::vector<std::vector<double>> outputs;  // [fidelity-1], lengths c_k
};

NestedSampleSet bundle_view(const Bundle& bundle, const std::vector<std::size_t>& counts) {
    NestedSampleSet data;
    data.counts = counts;
    const std::size_t m_last = counts.back();
    data.inputs.assign(bundle.inputs.begin(), bundle.inputs.begin() + m_last);
    data.feature_columns.assign(bundle.xcols.begin(), bundle.xcols.begin() + m_last);
    data.outputs.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
        data.outputs[k].assign(bundle.outputs[k].begin(), bundle.outputs[k].begin() + counts[k]);
    }
    data.validate();
    return data;
}

}  // namespace

// ---------------------------------------------------------------------------
// run_experiment

ExperimentReport run_experiment(const ExperimentPlan& plan) {
    const Resolved res = resolve(plan);
    const std::size_t n_budgets = plan.budgets.size();
    const std::size_t n_strats = plan.strategies.size();
    const std::size_t n_reps = plan.replications;

    models::CostLedger training_ledger(res.costs);
    models::CostLedger pilot_ledger(res.costs);

    std::vector<RepOutput> reps(n_reps);

    auto run_replication = [&](std::size_t rep) {
        RepOutput& out = reps[rep];
        out.slots.resize(n_budgets * n_strats);
        const std::uint64_t seed_r = rng::derive(plan.base_seed, rep);

        // Statistics for this replication.
        const statistics::ModelStats* stats = nullptr;
        statistics::ModelStats pilot;
        std::optional<NestedSampleSet> pilot_data;
        std::string stats_error;
        if (res.pilot_mode) {
            try {
                rng::Rng pg(rng::derive(seed_r, 1));
                std::vector<Vector> zs, xs;
                zs.reserve(plan.n_pilot);
                xs.reserve(plan.n_pilot);
                for (std::size_t i = 0; i < plan.n_pilot; ++i) {
                    zs.push_back(res.family->distribution.draw(pg));
                    xs.push_back(res.map.eval(zs.back()));
                }
                NestedSampleSet pdata;
                pdata.counts.assign(res.family->models.fidelities(), plan.n_pilot);
                pdata.inputs = std::move(zs);
                pdata.feature_columns = std::move(xs);
                pdata.outputs.resize(res.family->models.fidelities());
                for (std::size_t k = 0; k < res.family->models.fidelities(); ++k) {
                    pdata.outputs[k] =
                        res.family->models.evaluate_batch(k + 1, pdata.inputs, pilot_ledger);
                }
                pilot = statistics::stats_from_dataset(pdata, res.map);
                pilot.provenance = "pilot(" + std::to_string(plan.n_pilot) + ")";
                stats = &pilot;
                if (plan.reuse_pilot) pilot_data = std::move(pdata);
            } catch (const Error& e) {
                stats_error = e.what();
            }
        } else {
            stats = &*res.fixed_stats;
        }

        // Coefficients per strategy.
        std::vector<std::optional<CoefficientStrategy>> coeffs(n_strats);
        std::vector<std::string> coeff_errors(n_strats);
        for (std::size_t si = 0; si < n_strats; ++si) {
            if (!stats_error.empty()) {
                coeff_errors[si] = stats_error;
                continue;
            }
            if (!res.pilot_mode) {
                coeffs[si] = res.fixed_coeffs[si];
                coeff_errors[si] = res.fixed_coeff_errors[si];
                continue;
            }
            try {
                coeffs[si] = coefficients::strategy_coefficients(plan.strategies[si], *stats);
            } catch (const Error& e) {
                coeff_errors[si] = e.what();
            }
        }

        if (res.pilot_mode) out.pilot_alloc.resize(n_budgets);

        for (std::size_t bi = 0; bi < n_budgets; ++bi) {
            const double budget = plan.budgets[bi];
            std::optional<allocation::Allocation> alloc;
            std::string alloc_error = stats_error;
            if (alloc_error.empty() && res.any_mf) {
                if (res.pilot_mode) {
                    try {
                        alloc = allocation::allocate(*stats, res.costs, budget,
                                                     plan.allocate_options);
                        out.pilot_alloc[bi] = alloc->counts;
                    } catch (const Error& e) {
                        alloc_error = e.what();
                    }
                } else {
                    alloc = res.fixed_allocs[bi];
                    alloc_error = res.fixed_alloc_errors[bi];
                }
            }

            const std::size_t n_sf = sf_count(budget, res.costs[0]);
            auto fail_cell = [&](std::size_t si, const std::string& msg) {
                out.slots[bi * n_strats + si].error = msg;
            };
            if (!alloc_error.empty()) {
                for (std::size_t si = 0; si < n_strats; ++si) fail_cell(si, alloc_error);
                continue;
            }
            if (res.any_sf && n_sf < 1) {
                for (std::size_t si = 0; si < n_strats; ++si) {
                    if (plan.strategies[si] == StrategyKind::SingleFidelity) {
                        fail_cell(si, "budget below one high-fidelity sample");
                    }
                }
            }

            // Shared data bundle for this budget.
            Bundle bundle;
            std::string data_error;
            const std::size_t k_count = res.costs.size();
            std::vector<std::size_t> eval_counts(k_count, 0);
            if (alloc) eval_counts = alloc->counts;
            if (res.any_sf) eval_counts[0] = std::max(eval_counts[0], n_sf);
            const std::size_t l_total =
                std::max(eval_counts.back(), eval_counts[0]);
            try {
                if (res.generative) {
                    rng::Rng gen(rng::derive(seed_r, 2 + bi));
                    const std::size_t n_reused =
                        pilot_data ? std::min(pilot_data->inputs.size(), l_total) : 0;
                    bundle.inputs.reserve(l_total);
                    bundle.xcols.reserve(l_total);
                    for (std::size_t i = 0; i < n_reused; ++i) {
                        bundle.inputs.push_back(pilot_data->inputs[i]);
                        bundle.xcols.push_back(pilot_data->feature_columns[i]);
                    }
                    for (std::size_t i = n_reused; i < l_total; ++i) {
                        bundle.inputs.push_back(res.family->distribution.draw(gen));
                        bundle.xcols.push_back(res.map.eval(bundle.inputs.back()));
                    }
                    bundle.outputs.resize(k_count);
                    for (std::size_t k = 0; k < k_count; ++k) {
                        auto& ys = bundle.outputs[k];
                        ys.reserve(eval_counts[k]);
                        for (std::size_t i = 0; i < eval_counts[k]; ++i) {
                            if (i < n_reused) {
                                ys.push_back(pilot_data->outputs[k][i]);
                            } else {
                                ys.push_back(res.family->models.evaluate(
                                    k + 1, bundle.inputs[i], training_ledger));
                            }
                        }
                    }
                } else {
                    rng::Rng gen(rng::derive(seed_r, 2 + bi));
                    std::vector<std::size_t> rows_drawn;
                    const std::size_t n_rows = res.dataset->rows();
                    if (plan.bootstrap_with_replacement) {
                        for (std::size_t i = 0; i < l_total; ++i) {
                            rows_drawn.push_back(
                                static_cast<std::size_t>(gen.next_u64() % n_rows));
                        }
                    } else {
                        if (l_total > n_rows) {
                            throw InsufficientRows("budget needs " + std::to_string(l_total) +
                                                   " rows, dataset has " +
                                                   std::to_string(n_rows));
                        }
                        std::vector<std::size_t> idx(n_rows);
                        for (std::size_t i = 0; i < n_rows; ++i) idx[i] = i;
                        for (std::size_t i = 0; i < l_total; ++i) {
                            const std::size_t j =
                                i + static_cast<std::size_t>(gen.next_u64() % (n_rows - i));
                            std::swap(idx[i], idx[j]);
                        }
                        rows_drawn.assign(idx.begin(), idx.begin() + l_total);
                    }
                    bundle.inputs.reserve(l_total);
                    bundle.xcols.reserve(l_total);
                    for (std::size_t i : rows_drawn) {
                        bundle.inputs.push_back(res.dataset->inputs()[i]);
                        bundle.xcols.push_back(res.map.eval(bundle.inputs.back()));
                    }
                    bundle.outputs.resize(k_count);
                    for (std::size_t k = 0; k < k_count; ++k) {
                        auto& ys = bundle.outputs[k];
                        ys.reserve(eval_counts[k]);
                        for (std::size_t i = 0; i < eval_counts[k]; ++i) {
                            ys.push_back(res.dataset->output(k + 1, rows_drawn[i]));
                        }
                    }
                }
            } catch (const Error& e) {
                data_error = e.what();
            }
            if (!data_error.empty()) {
                for (std::size_t si = 0; si < n_strats; ++si) fail_cell(si, data_error);
                continue;
            }

            const CoefficientStrategy sf_strategy = coefficients::single_fidelity();
            for (std::size_t si = 0; si < n_strats; ++si) {
                Slot& slot = out.slots[bi * n_strats + si];
                if (!slot.error.empty()) continue;
                const StrategyKind kind = plan.strategies[si];
                if (kind != StrategyKind::SingleFidelity && !coeffs[si]) {
                    slot.error = coeff_errors[si];
                    continue;
                }
                try {
                    NestedSampleSet data;
                    if (kind == StrategyKind::SingleFidelity) {
                        data = bundle_view(bundle, std::vector<std::size_t>{n_sf});
                        slot.counts = {n_sf};
                        slot.realized_cost = static_cast<double>(n_sf) * res.costs[0];
                    } else {
                        data = bundle_view(bundle, alloc->counts);
                        slot.counts = alloc->counts;
                        slot.realized_cost = alloc->realized_cost;
                    }
                    const CoefficientStrategy& strat =
                        kind == StrategyKind::SingleFidelity ? sf_strategy : *coeffs[si];
                    estimators::FitResult fr = estimators::fit(data, strat, res.c_xx);
                    slot.c_xy = std::move(fr.c_xy_hat);
                    slot.beta = std::move(fr.beta_hat);
                    slot.preds.reserve(res.eval_x.size());
                    for (const Vector& x : res.eval_x) slot.preds.push_back(x.dot(slot.beta));
                    slot.ok = true;
                } catch (const Error& e) {
                    slot.error = e.what();
                }
            }
        }
    };

    const std::size_t n_workers = std::max<std::size_t>(1, std::min(plan.workers, n_reps));
    if (n_workers == 1) {
        for (std::size_t rep = 0; rep < n_reps; ++rep) run_replication(rep);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t rep; (rep = next.fetch_add(1)) < n_reps;) run_replication(rep);
            });
        }
        for (std::thread& t : pool) t.join();
    }

    // Fixed-order reduction over replication slots.
    ExperimentReport report;
    report.base_seed = plan.base_seed;
    report.replications = n_reps;
    report.budgets = plan.budgets;
    report.strategies = plan.strategies;
    report.eval_points = res.eval_points;
    report.training_cost = training_ledger.total();
    report.pilot_cost = pilot_ledger.total();

    for (std::size_t bi = 0; bi < n_budgets; ++bi) {
        for (std::size_t si = 0; si < n_strats; ++si) {
            CellResult cell;
            cell.budget = plan.budgets[bi];
            cell.strategy = plan.strategies[si];
            cell.rep_ok.resize(n_reps, 0);
            cell.rep_cxy.resize(n_reps);
            cell.rep_beta.resize(n_reps);
            cell.rep_pred.resize(n_reps);

            std::vector<std::size_t> ok_reps;
            for (std::size_t rep = 0; rep < n_reps; ++rep) {
                const Slot& slot = reps[rep].slots[bi * n_strats + si];
                if (!slot.ok) {
                    ++cell.failed;
                    if (cell.first_failure.empty()) cell.first_failure = slot.error;
                    continue;
                }
                cell.rep_ok[rep] = 1;
                cell.rep_cxy[rep] = slot.c_xy;
                cell.rep_beta[rep] = slot.beta;
                cell.rep_pred[rep] = slot.preds;
                cell.mean_realized_cost += slot.realized_cost;
                ok_reps.push_back(rep);
            }
            cell.succeeded = ok_reps.size();
            if (!ok_reps.empty()) {
                cell.mean_realized_cost /= static_cast<double>(ok_reps.size());
                cell.allocation_counts = reps[ok_reps.front()].slots[bi * n_strats + si].counts;
            }
            cell.allocation_fixed = !res.pilot_mode;
            if (res.pilot_mode && cell.strategy != StrategyKind::SingleFidelity) {
                const std::size_t k_count = res.costs.size();
                cell.allocation_mean.assign(k_count, 0.0);
                cell.allocation_rel_std.assign(k_count, 0.0);
                std::size_t n_alloc = 0;
                for (std::size_t rep : ok_reps) {
                    if (reps[rep].pilot_alloc[bi].empty()) continue;
                    ++n_alloc;
                    for (std::size_t k = 0; k < k_count; ++k) {
                        cell.allocation_mean[k] +=
                            static_cast<double>(reps[rep].pilot_alloc[bi][k]);
                    }
                }
                if (n_alloc > 1) {
                    for (double& v : cell.allocation_mean) v /= static_cast<double>(n_alloc);
                    for (std::size_t rep : ok_reps) {
                        if (reps[rep].pilot_alloc[bi].empty()) continue;
                        for (std::size_t k = 0; k < k_count; ++k) {
                            const double d =
                                static_cast<double>(reps[rep].pilot_alloc[bi][k]) -
                                cell.allocation_mean[k];
                            cell.allocation_rel_std[k] += d * d;
                        }
                    }
                    for (std::size_t k = 0; k < k_count; ++k) {
                        cell.allocation_rel_std[k] = std::sqrt(cell.allocation_rel_std[k] /
                                                               static_cast<double>(n_alloc - 1));
                        if (cell.allocation_mean[k] > 0.0) {
                            cell.allocation_rel_std[k] /= cell.allocation_mean[k];
                        }
                    }
                }
            }

            if (cell.succeeded >= 2) {
                const std::size_t d = cell.rep_cxy[ok_reps.front()].dim();
                auto reduce = [&](auto accessor) {
                    Vector mean(d);
                    for (std::size_t rep : ok_reps) mean += accessor(rep);
                    mean *= 1.0 / static_cast<double>(ok_reps.size());
                    GenMatrix cov(d, d);
                    for (std::size_t rep : ok_reps) {
                        const Vector v = accessor(rep) - mean;
                        for (std::size_t i = 0; i < d; ++i) {
                            for (std::size_t j = i; j < d; ++j) cov(i, j) += v[i] * v[j];
                        }
                    }
                    for (std::size_t i = 0; i < d; ++i) {
                        for (std::size_t j = i; j < d; ++j) {
                            cov(i, j) /= static_cast<double>(ok_reps.size() - 1);
                            cov(j, i) = cov(i, j);
                        }
                    }
                    return std::pair{mean, SymMatrix::from_general(cov, 1e-9)};
                };
                auto [mc, cc] = reduce([&](std::size_t rep) -> const Vector& {
                    return cell.rep_cxy[rep];
                });
                auto [mb, cb] = reduce([&](std::size_t rep) -> const Vector& {
                    return cell.rep_beta[rep];
                });
                cell.mean_cxy = std::move(mc);
                cell.cov_cxy = std::move(cc);
                cell.mean_beta = std::move(mb);
                cell.cov_beta = std::move(cb);
                cell.tr_cov_cxy = linalg::trace(cell.cov_cxy);
                cell.tr_cov_beta = linalg::trace(cell.cov_beta);
                for (std::size_t pt = 0; pt < res.eval_points.size(); ++pt) {
                    PredictionSummary ps;
                    ps.point = res.eval_points[pt];
                    for (std::size_t rep : ok_reps) ps.mean += cell.rep_pred[rep][pt];
                    ps.mean /= static_cast<double>(ok_reps.size());
                    for (std::size_t rep : ok_reps) {
                        const double dv = cell.rep_pred[rep][pt] - ps.mean;
                        ps.variance += dv * dv;
                    }
                    ps.variance /= static_cast<double>(ok_reps.size() - 1);
                    cell.predictions.push_back(std::move(ps));
                }
            }
            report.cells.push_back(std::move(cell));
        }
    }

    // Pilot allocation variation across replications (first budget granularity
    // preserved per budget).
    if (res.pilot_mode && res.any_mf) {
        AllocationVariation var;
        var.budgets = plan.budgets;
        const std::size_t k_count = res.costs.size();
        for (std::size_t bi = 0; bi < n_budgets; ++bi) {
            std::vector<double> mean(k_count, 0.0), sd(k_count, 0.0);
            std::size_t n = 0;
            for (std::size_t rep = 0; rep < n_reps; ++rep) {
                if (reps[rep].pilot_alloc.empty() || reps[rep].pilot_alloc[bi].empty()) continue;
                ++n;
                for (std::size_t k = 0; k < k_count; ++k) {
                    mean[k] += static_cast<double>(reps[rep].pilot_alloc[bi][k]);
                }
            }
            if (n >= 2) {
                for (double& v : mean) v /= static_cast<double>(n);
                for (std::size_t rep = 0; rep < n_reps; ++rep) {
                    if (reps[rep].pilot_alloc.empty() || reps[rep].pilot_alloc[bi].empty()) {
                        continue;
                    }
                    for (std::size_t k = 0; k < k_count; ++k) {
                        const double d =
                            static_cast<double>(reps[rep].pilot_alloc[bi][k]) - mean[k];
                        sd[k] += d * d;
                    }
                }
                for (std::size_t k = 0; k < k_count; ++k) {
                    sd[k] = std::sqrt(sd[k] / static_cast<double>(n - 1));
                    if (mean[k] > 0.0) sd[k] /= mean[k];
                }
            }
            var.mean.push_back(std::move(mean));
            var.rel_std.push_back(std::move(sd));
        }
        report.pilot_allocation_variation = std::move(var);
    }

    // Resolved-plan echo, excluding execution-only knobs (workers) so reports
    // are byte-identical for any worker count.
    nlohmann::json echo;
    if (!plan.family.empty()) echo["family"] = plan.family;
    if (!plan.dataset_path.empty()) {
        echo["dataset"] = plan.dataset_path;
        echo["costs"] = plan.dataset_costs;
    }
    echo["budgets"] = plan.budgets;
    {
        std::vector<std::string> names;
        for (StrategyKind s : plan.strategies) names.push_back(coefficients::strategy_name(s));
        echo["strategies"] = names;
    }
    switch (plan.stats_mode) {
        case StatsMode::Exact: echo["stats"] = {{"mode", "exact"}}; break;
        case StatsMode::Pilot:
            echo["stats"] = {{"mode", "pilot"},
                             {"n_pilot", plan.n_pilot},
                             {"reuse_pilot", plan.reuse_pilot}};
            break;
        case StatsMode::Dataset: echo["stats"] = {{"mode", "dataset"}}; break;
        case StatsMode::Provided:
            echo["stats"] = {{"mode", "provided"}, {"source", plan.provided_stats_label}};
            break;
    }
    echo["cxx"] = plan.cxx_mode == CxxMode::Exact
                      ? nlohmann::json{{"mode", "exact"}}
                      : nlohmann::json{{"mode", "sample"}, {"samples", plan.cxx_samples}};
    echo["replications"] = plan.replications;
    echo["seed"] = plan.base_seed;
    echo["standardize_features"] = res.map.standardized();
    echo["bootstrap_with_replacement"] = plan.bootstrap_with_replacement;
    {
        nlohmann::json pts = nlohmann::json::array();
        for (const Vector& z : res.eval_points) pts.push_back(z.values());
        echo["eval_points"] = pts;
    }
    report.plan_echo_json = echo.dump();

    return report;
}

AllocationVariation allocation_variation(const ExperimentPlan& plan, std::size_t n_pilot,
                                         std::size_t replications) {
    if (replications < 2) throw InvalidInput("allocation_variation needs R >= 2");
    ExperimentPlan p = plan;
    p.stats_mode = StatsMode::Pilot;
    p.n_pilot = n_pilot;
    const Resolved res = resolve(p);
    if (!res.generative) {
        throw InvalidInput("allocation_variation needs a generative family");
    }

    models::CostLedger scratch(res.costs);
    const std::size_t k_count = res.costs.size();
    std::vector<std::vector<std::vector<std::size_t>>> counts(
        plan.budgets.size());  // [budget][rep][fidelity]
    for (std::size_t rep = 0; rep < replications; ++rep) {
        const std::uint64_t seed_r = rng::derive(plan.base_seed, rep);
        const statistics::ModelStats stats =
            statistics::pilot_stats(res.family->models, res.map, res.family->distribution,
                                    n_pilot, rng::derive(seed_r, 1), scratch);
        for (std::size_t bi = 0; bi < plan.budgets.size(); ++bi) {
            const allocation::Allocation alloc =
                allocation::allocate(stats, res.costs, plan.budgets[bi], plan.allocate_options);
            counts[bi].push_back(alloc.counts);
        }
    }

    AllocationVariation var;
    var.budgets = plan.budgets;
    for (std::size_t bi = 0; bi < plan.budgets.size(); ++bi) {
        std::vector<double> mean(k_count, 0.0), sd(k_count, 0.0);
        for (const auto& c : counts[bi]) {
            for (std::size_t k = 0; k < k_count; ++k) mean[k] += static_cast<double>(c[k]);
        }
        for (double& v : mean) v /= static_cast<double>(counts[bi].size());
        for (const auto& c : counts[bi]) {
            for (std::size_t k = 0; k < k_count; ++k) {
                const double d = static_cast<double>(c[k]) - mean[k];
                sd[k] += d * d;
            }
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            sd[k] = std::sqrt(sd[k] / static_cast<double>(counts[bi].size() - 1));
            if (mean[k] > 0.0) sd[k] /= mean[k];
        }
        var.mean.push_back(std::move(mean));
        var.rel_std.push_back(std::move(sd));
    }
    return var;
}

// ---------------------------------------------------------------------------
// Report serialization

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string pred_target_label(const std::vector<Vector>& points, std::size_t index) {
    if (points[index].dim() == 1) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "pred@%g", points[index][0]);
        return buf;
    }
    return "pred@" + std::to_string(index);
}

nlohmann::json matrix_to_json(const SymMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.dim(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

const CellResult& ExperimentReport::cell(double budget,
                                         coefficients::StrategyKind strategy) const {
    for (const CellResult& c : cells) {
        if (c.budget == budget && c.strategy == strategy) return c;
    }
    throw InvalidInput("no cell for budget " + std::to_string(budget) + ", strategy " +
                       coefficients::strategy_name(strategy));
}

std::string ExperimentReport::to_json() const {
    nlohmann::json j;
    j["plan"] = nlohmann::json::parse(plan_echo_json);
    j["seed"] = base_seed;
    j["replications"] = replications;
    j["training_cost"] = training_cost;
    j["pilot_cost"] = pilot_cost;
    nlohmann::json cells_json = nlohmann::json::array();
    for (const CellResult& c : cells) {
        nlohmann::json cj;
        cj["budget"] = c.budget;
        cj["strategy"] = coefficients::strategy_name(c.strategy);
        cj["succeeded"] = c.succeeded;
        cj["failed"] = c.failed;
        if (!c.first_failure.empty()) cj["first_failure"] = c.first_failure;
        nlohmann::json aj;
        aj["fixed"] = c.allocation_fixed;
        aj["counts"] = c.allocation_counts;
        if (!c.allocation_mean.empty()) {
            aj["mean"] = c.allocation_mean;
            aj["rel_std"] = c.allocation_rel_std;
        }
        cj["allocation"] = aj;
        cj["mean_realized_cost"] = c.mean_realized_cost;
        if (c.succeeded >= 2) {
            cj["mean_cxy"] = c.mean_cxy.values();
            cj["mean_beta"] = c.mean_beta.values();
            cj["cov_cxy"] = matrix_to_json(c.cov_cxy);
            cj["cov_beta"] = matrix_to_json(c.cov_beta);
            cj["tr_cov_cxy"] = c.tr_cov_cxy;
            cj["tr_cov_beta"] = c.tr_cov_beta;
            nlohmann::json preds = nlohmann::json::array();
            for (const PredictionSummary& p : c.predictions) {
                preds.push_back({{"point", p.point.values()},
                                 {"mean", p.mean},
                                 {"variance", p.variance}});
            }
            cj["predictions"] = preds;
        }
        cells_json.push_back(std::move(cj));
    }
    j["cells"] = cells_json;
    if (pilot_allocation_variation) {
        nlohmann::json vj;
        vj["budgets"] = pilot_allocation_variation->budgets;
        vj["mean"] = pilot_allocation_variation->mean;
        vj["rel_std"] = pilot_allocation_variation->rel_std;
        j["allocation_variation"] = vj;
    }
    return j.dump(2) + "\n";
}

std::string ExperimentReport::trace_cov_csv() const {
    std::string out = "budget,strategy,target,trace\n";
    for (const CellResult& c : cells) {
        if (c.succeeded < 2) continue;
        const std::string prefix =
            fmt_double(c.budget) + "," + coefficients::strategy_name(c.strategy) + ",";
        out += prefix + "cxy," + fmt_double(c.tr_cov_cxy) + "\n";
        out += prefix + "beta," + fmt_double(c.tr_cov_beta) + "\n";
        for (std::size_t pt = 0; pt < c.predictions.size(); ++pt) {
            out += prefix + pred_target_label(eval_points, pt) + "," +
                   fmt_double(c.predictions[pt].variance) + "\n";
        }
    }
    return out;
}

std::string ExperimentReport::estimates_csv() const {
    std::string out = "budget,replication,strategy,component,value\n";
    for (const CellResult& c : cells) {
        const std::string strategy = coefficients::strategy_name(c.strategy);
        for (std::size_t rep = 0; rep < c.rep_ok.size(); ++rep) {
            if (!c.rep_ok[rep]) continue;
            const std::string prefix =
                fmt_double(c.budget) + "," + std::to_string(rep) + "," + strategy + ",";
            for (std::size_t i = 0; i < c.rep_cxy[rep].dim(); ++i) {
                out += prefix + "cxy_" + std::to_string(i) + "," +
                       fmt_double(c.rep_cxy[rep][i]) + "\n";
            }
            for (std::size_t i = 0; i < c.rep_beta[rep].dim(); ++i) {
                out += prefix + "beta_" + std::to_string(i) + "," +
                       fmt_double(c.rep_beta[rep][i]) + "\n";
            }
            for (std::size_t pt = 0; pt < c.rep_pred[rep].size(); ++pt) {
                out += prefix + pred_target_label(eval_points, pt) + "," +
                       fmt_double(c.rep_pred[rep][pt]) + "\n";
            }
        }
    }
    return out;
}

void ExperimentReport::write_files(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& content) {
        const std::string path = dir + "/" + name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write '" + path + "'");
        out << content;
    };
    write("report.json", to_json());
    write("trace_cov.csv", trace_cov_csv());
    write("estimates.csv", estimates_csv());
}

}  // namespace mflr::experiments
