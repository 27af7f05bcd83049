#include "mflr/statistics.hpp"

#include <cmath>
#include <string>

namespace mflr::statistics {

void ModelStats::validate() const {
    if (fidelities == 0) throw InvalidInput("ModelStats: no fidelities");
    if (sigma.size() != fidelities || rho.size() != fidelities) {
        throw CountMismatch("ModelStats: sigma/rho size vs K");
    }
    for (double s : sigma)
        if (!(s > 0.0)) throw DegenerateStats("ModelStats: sigma must be positive");
    if (std::abs(rho[0] - 1.0) > 1e-12) {
        throw InvalidInput("ModelStats: rho_{1,1} must be 1");
    }
    for (double r : rho)
        if (std::abs(r) > 1.0 + 1e-12) throw InvalidInput("ModelStats: |rho| must be <= 1");
    if (has_matrices && (c1k.size() != fidelities || ckk.size() != fidelities)) {
        throw CountMismatch("ModelStats: matrix block size vs K");
    }
}

namespace {

struct ScalarMoments {
    std::vector<double> mean;       // E[f_k]
    std::vector<double> var;        // Var[f_k]
    std::vector<double> cov_with1;  // Cov[f_1, f_k]
};

// Sample second-order statistics of the fidelity outputs, 1/(n-1) everywhere.
ScalarMoments scalar_sample_moments(const std::vector<std::vector<double>>& ys) {
    const std::size_t k_count = ys.size();
    const std::size_t n = ys[0].size();
    ScalarMoments m;
    m.mean.resize(k_count);
    m.var.resize(k_count);
    m.cov_with1.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        double acc = 0.0;
        for (double v : ys[k]) acc += v;
        m.mean[k] = acc / static_cast<double>(n);
    }
    for (std::size_t k = 0; k < k_count; ++k) {
        double var = 0.0, cov = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dk = ys[k][i] - m.mean[k];
            var += dk * dk;
            cov += (ys[0][i] - m.mean[0]) * dk;
        }
        m.var[k] = var / static_cast<double>(n - 1);
        m.cov_with1[k] = cov / static_cast<double>(n - 1);
    }
    return m;
}

ModelStats stats_from_common_block(const std::vector<linalg::Vector>& xs,
                                   const std::vector<std::vector<double>>& ys,
                                   std::string provenance) {
    const std::size_t k_count = ys.size();
    const std::size_t n = ys[0].size();
    if (n < 2) throw InsufficientSamples("need at least 2 common samples, got " +
                                         std::to_string(n));

    const ScalarMoments m = scalar_sample_moments(ys);

    ModelStats stats;
    stats.fidelities = k_count;
    stats.provenance = std::move(provenance);
    stats.sigma.resize(k_count);
    stats.rho.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        if (!(m.var[k] > 0.0)) {
            throw DegenerateStats("fidelity " + std::to_string(k + 1) +
                                  " has zero sample variance");
        }
        stats.sigma[k] = std::sqrt(m.var[k]);
    }
    stats.rho[0] = 1.0;
    for (std::size_t k = 1; k < k_count; ++k) {
        stats.rho[k] = m.cov_with1[k] / (stats.sigma[0] * stats.sigma[k]);
    }

    // g^(k)_i = x_i * f_k(z_i); cross-covariances via linalg::sample_cov.
    std::vector<std::vector<linalg::Vector>> g(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        g[k].reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            linalg::Vector gi = xs[i];
            gi *= ys[k][i];
            g[k].push_back(std::move(gi));
        }
    }
    stats.has_matrices = true;
    for (std::size_t k = 0; k < k_count; ++k) {
        stats.c1k.push_back(linalg::sample_cov(g[0], g[k]));
        linalg::GenMatrix ckk = linalg::sample_cov(g[k], g[k]);
        stats.ckk.push_back(linalg::SymMatrix::from_general(ckk, 1e-9));
    }
    stats.validate();
    return stats;
}

}  // namespace

ModelStats pilot_stats(const models::ModelSet& set, const features::FeatureMap& map,
                       const features::InputDistribution& dist, std::size_t n_pilot,
                       std::uint64_t seed, models::CostLedger& ledger) {
    if (n_pilot < 2) {
        throw InsufficientSamples("pilot_stats needs n_pilot >= 2, got " +
                                  std::to_string(n_pilot));
    }
    rng::Rng gen(seed);
    std::vector<linalg::Vector> xs;
    xs.reserve(n_pilot);
    std::vector<linalg::Vector> zs;
    zs.reserve(n_pilot);
    for (std::size_t i = 0; i < n_pilot; ++i) {
        zs.push_back(dist.draw(gen));
        xs.push_back(map.eval(zs.back()));
    }
    std::vector<std::vector<double>> ys(set.fidelities());
    for (std::size_t k = 0; k < set.fidelities(); ++k) {
        ys[k] = set.evaluate_batch(k + 1, zs, ledger);
    }
    return stats_from_common_block(xs, ys, "pilot(" + std::to_string(n_pilot) + ")");
}

double exp_moment(int a, double b) {
    // I(a,b) = integral_0^5 z^a e^{bz} dz via the exact recursion
    // I(a,b) = (5^a e^{5b} - a I(a-1,b)) / b; E = I / 5.
    constexpr double hi = 5.0;
    if (b == 0.0) return std::pow(hi, a) / (a + 1);
    double integral = (std::exp(b * hi) - 1.0) / b;
    for (int k = 1; k <= a; ++k) {
        integral = (std::pow(hi, k) * std::exp(b * hi) - k * integral) / b;
    }
    return integral / hi;
}

linalg::Vector exact_cxy_exp() {
    linalg::Vector c(3);
    for (int i = 0; i < 3; ++i) c[i] = 8.0 * exp_moment(i, 1.0);
    return c;
}

ModelStats exact_stats_exp() {
    // f1 = 8 e^z, f2 = 7.2 e^{z/2}; all moments reduce to E[z^a e^{bz}].
    constexpr double c1 = 8.0, b1 = 1.0;
    constexpr double c2 = 7.2, b2 = 0.5;

    auto ef = [&](int a, int k) {  // E[z^a f_k]
        return k == 1 ? c1 * exp_moment(a, b1) : c2 * exp_moment(a, b2);
    };
    auto eff = [&](int a, int k, int l) {  // E[z^a f_k f_l]
        const double ck = (k == 1 ? c1 : c2), bk = (k == 1 ? b1 : b2);
        const double cl = (l == 1 ? c1 : c2), bl = (l == 1 ? b1 : b2);
        return ck * cl * exp_moment(a, bk + bl);
    };

    ModelStats stats;
    stats.fidelities = 2;
    stats.provenance = "exact-oracle";
    const double var1 = eff(0, 1, 1) - ef(0, 1) * ef(0, 1);
    const double var2 = eff(0, 2, 2) - ef(0, 2) * ef(0, 2);
    const double cov = eff(0, 1, 2) - ef(0, 1) * ef(0, 2);
    stats.sigma = {std::sqrt(var1), std::sqrt(var2)};
    stats.rho = {1.0, cov / (stats.sigma[0] * stats.sigma[1])};

    auto cg = [&](int k, int l) {
        linalg::GenMatrix m(3, 3);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                m(i, j) = eff(i + j, k, l) - ef(i, k) * ef(j, l);
            }
        }
        return m;
    };
    stats.has_matrices = true;
    stats.c1k = {cg(1, 1), cg(1, 2)};
    stats.ckk = {linalg::SymMatrix::from_general(cg(1, 1), 1e-9),
                 linalg::SymMatrix::from_general(cg(2, 2), 1e-9)};
    stats.validate();
    return stats;
}

ModelStats stats_from_dataset(const estimators::NestedSampleSet& data,
                              const features::FeatureMap& map) {
    data.validate();
    const std::size_t k_count = data.fidelities();
    const std::size_t n = data.counts.front();  // common prefix carries all fidelities
    if (n < 2) {
        throw InsufficientSamples("stats_from_dataset needs a common block of >= 2 samples");
    }
    for (std::size_t k = 0; k < k_count; ++k) {
        if (data.outputs[k].size() < n) {
            throw MissingFidelity("fidelity " + std::to_string(k + 1) +
                                  " missing on the common block");
        }
    }
    std::vector<linalg::Vector> xs;
    xs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) xs.push_back(map.eval(data.inputs[i]));
    std::vector<std::vector<double>> ys(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        ys[k].assign(data.outputs[k].begin(), data.outputs[k].begin() + n);
    }
    return stats_from_common_block(xs, ys, "dataset(" + std::to_string(n) + ")");
}

}  // namespace mflr::statistics
