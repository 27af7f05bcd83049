#include "mflr/models.hpp"

#include <cmath>
#include <sstream>

namespace mflr::models {

CostLedger::CostLedger(std::vector<double> costs)
    : costs_(std::move(costs)), counts_(new std::atomic<std::uint64_t>[costs_.size()]) {
    for (std::size_t k = 0; k < costs_.size(); ++k) counts_[k].store(0);
}

void CostLedger::charge(std::size_t fidelity, std::uint64_t n) {
    if (fidelity < 1 || fidelity > costs_.size()) {
        throw InvalidInput("CostLedger::charge: fidelity " + std::to_string(fidelity) +
                           " out of range 1.." + std::to_string(costs_.size()));
    }
    counts_[fidelity - 1].fetch_add(n, std::memory_order_relaxed);
}

std::uint64_t CostLedger::count(std::size_t fidelity) const {
    return counts_[fidelity - 1].load(std::memory_order_relaxed);
}

double CostLedger::total() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < costs_.size(); ++k) {
        acc += static_cast<double>(counts_[k].load(std::memory_order_relaxed)) * costs_[k];
    }
    return acc;
}

ModelSet::ModelSet(std::string name, std::vector<Evaluator> evaluators,
                   std::vector<double> costs)
    : name_(std::move(name)), evaluators_(std::move(evaluators)), costs_(std::move(costs)) {
    if (evaluators_.empty()) throw InvalidInput("ModelSet: needs at least one fidelity");
    if (evaluators_.size() != costs_.size()) {
        throw DimensionMismatch("ModelSet: " + std::to_string(evaluators_.size()) +
                                " evaluators vs " + std::to_string(costs_.size()) + " costs");
    }
    for (std::size_t k = 0; k < costs_.size(); ++k) {
        if (costs_[k] <= 0.0) throw InvalidInput("ModelSet: costs must be positive");
        if (k > 0 && !(costs_[k - 1] > costs_[k])) {
            throw InvalidInput("ModelSet: costs must strictly decrease with fidelity index");
        }
    }
}

double ModelSet::cost(std::size_t fidelity) const {
    if (fidelity < 1 || fidelity > costs_.size()) {
        throw InvalidInput("ModelSet::cost: fidelity out of range");
    }
    return costs_[fidelity - 1];
}

double ModelSet::evaluate(std::size_t fidelity, const linalg::Vector& z,
                          CostLedger& ledger) const {
    if (fidelity < 1 || fidelity > evaluators_.size()) {
        throw InvalidInput("ModelSet::evaluate: fidelity " + std::to_string(fidelity) +
                           " out of range 1.." + std::to_string(evaluators_.size()));
    }
    const double y = evaluators_[fidelity - 1](z);
    ledger.charge(fidelity);
    return y;
}

std::vector<double> ModelSet::evaluate_batch(std::size_t fidelity,
                                             std::span<const linalg::Vector> zs,
                                             CostLedger& ledger) const {
    std::vector<double> out;
    out.reserve(zs.size());
    for (const linalg::Vector& z : zs) out.push_back(evaluate(fidelity, z, ledger));
    return out;
}

ModelSet exp_pair() {
    std::vector<Evaluator> evals;
    evals.push_back([](const linalg::Vector& z) {
        if (z.dim() != 1) throw DimensionMismatch("exp_pair expects scalar input");
        return 8.0 * std::exp(z[0]);
    });
    evals.push_back([](const linalg::Vector& z) {
        if (z.dim() != 1) throw DimensionMismatch("exp_pair expects scalar input");
        return 7.2 * std::exp(0.5 * z[0]);
    });
    return ModelSet("exp", std::move(evals), {1.0, 0.001});
}

features::InputDistribution exp_input_distribution() {
    return features::InputDistribution::uniform(0.0, 5.0, 1);
}

features::FeatureMap exp_default_features() { return features::FeatureMap::full_quadratic(1); }

void validate(const CdrConfig& cfg) {
    if (!(cfg.fine_cells > cfg.coarse_cells && cfg.coarse_cells >= 3)) {
        throw InvalidInput("CdrConfig: requires fine_cells > coarse_cells >= 3");
    }
    if (!(cfg.kappa > 0.0)) throw InvalidInput("CdrConfig: kappa must be positive");
    if (!(cfg.newton_tol > 0.0)) throw InvalidInput("CdrConfig: newton_tol must be positive");
    if (cfg.newton_max_iter < 1) throw InvalidInput("CdrConfig: newton_max_iter must be >= 1");
    if (cfg.source_scale < 0.0) throw InvalidInput("CdrConfig: source_scale must be >= 0");
}

namespace {

constexpr double kAref = 1e12;
constexpr double kTfloor = 100.0;  // Arrhenius guard for transient Newton iterates

struct SourceParams {
    double q;  // source_scale * (A_pe/1e12) * phi
    double e;  // activation_scale * E
};

double source(double t, const SourceParams& s) {
    return s.q * std::exp(-s.e / std::max(t, kTfloor));
}

double source_dt(double t, const SourceParams& s) {
    if (t <= kTfloor) return 0.0;
    return s.q * (s.e / (t * t)) * std::exp(-s.e / t);
}

// Interior residual of the central-difference discretization.
void residual(const std::vector<double>& t, double h, double kappa, double vel,
              const SourceParams& s, std::vector<double>& f) {
    const std::size_t n = t.size() - 1;
    for (std::size_t i = 1; i < n; ++i) {
        f[i - 1] = kappa * (t[i - 1] - 2.0 * t[i] + t[i + 1]) / (h * h) -
                   vel * (t[i + 1] - t[i - 1]) / (2.0 * h) + source(t[i], s);
    }
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double norm2(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

// Thomas solve of the tridiagonal Newton system; diag/rhs are overwritten.
void tridiag_solve(std::vector<double>& lower, std::vector<double>& diag,
                   std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

std::string format_z(const linalg::Vector& z) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < z.dim(); ++i) os << (i ? ", " : "") << z[i];
    os << ")";
    return os.str();
}

}  // namespace

CdrSolution cdr_solve(const CdrConfig& cfg, int cells, const linalg::Vector& z) {
    validate(cfg);
    if (z.dim() != 5) {
        throw DimensionMismatch("cdr_solve expects z = (A_pe, E, T_inlet, T_wall, phi)");
    }
    const int n = cells;
    const double h = 1.0 / n;
    const SourceParams sp{cfg.source_scale * (z[0] / kAref) * z[4],
                          cfg.activation_scale * z[1]};
    const double t_inlet = z[2];
    const double t_wall = z[3];

    // Deterministic initial iterate: linear interpolation of the boundary data.
    std::vector<double> t(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double x = static_cast<double>(i) / n;
        t[i] = t_wall + (t_inlet - t_wall) * x;
    }

    std::vector<double> f(n - 1), f_trial(n - 1);
    std::vector<double> lower(n - 1), diag(n - 1), upper(n - 1), step(n - 1);

    residual(t, h, cfg.kappa, cfg.velocity, sp, f);
    for (int it = 0; it < cfg.newton_max_iter; ++it) {
        const double rnorm = max_abs(f);
        if (rnorm <= cfg.newton_tol) {
            return CdrSolution{std::move(t), it, rnorm};
        }
        for (int i = 1; i < n; ++i) {
            lower[i - 1] = cfg.kappa / (h * h) + cfg.velocity / (2.0 * h);
            diag[i - 1] = -2.0 * cfg.kappa / (h * h) + source_dt(t[i], sp);
            upper[i - 1] = cfg.kappa / (h * h) - cfg.velocity / (2.0 * h);
            step[i - 1] = -f[i - 1];
        }
        tridiag_solve(lower, diag, upper, step);

        // Backtracking on the 2-norm of the residual; halve until it decreases.
        const double f0 = norm2(f);
        double lambda = 1.0;
        bool accepted = false;
        std::vector<double> t_trial(t);
        for (int bt = 0; bt <= cfg.newton_max_backtracks; ++bt) {
            for (int i = 1; i < n; ++i) t_trial[i] = t[i] + lambda * step[i - 1];
            residual(t_trial, h, cfg.kappa, cfg.velocity, sp, f_trial);
            if (norm2(f_trial) < f0) {
                t.swap(t_trial);
                f.swap(f_trial);
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            throw SolverDivergence("CDR Newton stalled at iteration " + std::to_string(it) +
                                   ", residual " + std::to_string(max_abs(f)) + ", z = " +
                                   format_z(z));
        }
    }
    throw SolverDivergence("CDR Newton exceeded " + std::to_string(cfg.newton_max_iter) +
                           " iterations, z = " + format_z(z));
}

ModelSet cdr_pair(const CdrConfig& cfg) {
    validate(cfg);
    auto make_eval = [cfg](int cells) {
        return [cfg, cells](const linalg::Vector& z) {
            const CdrSolution sol = cdr_solve(cfg, cells, z);
            double qoi = sol.temperature.front();
            for (double v : sol.temperature) qoi = std::max(qoi, v);
            return qoi;
        };
    };
    std::vector<Evaluator> evals;
    evals.push_back(make_eval(cfg.fine_cells));
    evals.push_back(make_eval(cfg.coarse_cells));
    const double w2 = static_cast<double>(cfg.coarse_cells) / cfg.fine_cells;
    return ModelSet("cdr1d", std::move(evals), {1.0, w2});
}

features::InputDistribution cdr_input_distribution() {
    using features::CoordinateRange;
    using features::Marginal;
    return features::InputDistribution({
        CoordinateRange{Marginal::LogUniform, 5.5e11, 1.5e12},  // A_pe
        CoordinateRange{Marginal::LogUniform, 1.5e3, 9.5e3},    // E
        CoordinateRange{Marginal::Uniform, 200.0, 400.0},       // T_inlet
        CoordinateRange{Marginal::Uniform, 850.0, 1000.0},      // T_wall
        CoordinateRange{Marginal::Uniform, 0.5, 1.5},           // phi
    });
}

features::FeatureMap cdr_default_features() {
    features::FeatureMap map = features::FeatureMap::full_quadratic(5);
    map.enable_standardization(cdr_input_distribution());
    return map;
}

ModelFamily family_by_name(const std::string& name, const CdrConfig& cdr_cfg) {
    if (name == "exp") {
        return ModelFamily{exp_pair(), exp_input_distribution(), exp_default_features()};
    }
    if (name == "cdr1d") {
        return ModelFamily{cdr_pair(cdr_cfg), cdr_input_distribution(), cdr_default_features()};
    }
    throw InvalidInput("unknown model family '" + name + "'; available: exp, cdr1d");
}

std::vector<std::string> family_names() { return {"exp", "cdr1d"}; }

}  // namespace mflr::models
