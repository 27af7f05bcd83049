#include "mflr/features.hpp"

#include <cmath>
#include <string>

namespace mflr::features {

InputDistribution::InputDistribution(std::vector<CoordinateRange> coords)
    : coords_(std::move(coords)) {
    if (coords_.empty()) throw InvalidInput("InputDistribution: dimension must be >= 1");
    for (const auto& c : coords_) {
        if (!(c.lo < c.hi)) {
            throw InvalidInput("InputDistribution: requires lo < hi, got [" +
                               std::to_string(c.lo) + ", " + std::to_string(c.hi) + "]");
        }
        if (c.kind == Marginal::LogUniform && c.lo <= 0.0) {
            throw InvalidInput("InputDistribution: log-uniform requires lo > 0");
        }
    }
}

InputDistribution InputDistribution::uniform(double lo, double hi, std::size_t p) {
    return InputDistribution(std::vector<CoordinateRange>(p, {Marginal::Uniform, lo, hi}));
}

double InputDistribution::raw_moment(std::size_t i, int k) const {
    const CoordinateRange& c = coords_[i];
    if (k == 0) return 1.0;
    switch (c.kind) {
        case Marginal::Uniform: {
            // (hi^{k+1} - lo^{k+1}) / ((k+1)(hi - lo))
            return (std::pow(c.hi, k + 1) - std::pow(c.lo, k + 1)) /
                   ((k + 1) * (c.hi - c.lo));
        }
        case Marginal::LogUniform: {
            return (std::pow(c.hi, k) - std::pow(c.lo, k)) / (k * std::log(c.hi / c.lo));
        }
    }
    throw UnsupportedDistribution("unknown marginal kind");
}

linalg::Vector InputDistribution::draw(rng::Rng& gen) const {
    linalg::Vector z(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        const CoordinateRange& c = coords_[i];
        switch (c.kind) {
            case Marginal::Uniform:
                z[i] = gen.uniform(c.lo, c.hi);
                break;
            case Marginal::LogUniform:
                z[i] = std::exp(gen.uniform(std::log(c.lo), std::log(c.hi)));
                break;
        }
    }
    return z;
}

FeatureMap FeatureMap::full_quadratic(std::size_t input_dim) {
    if (input_dim == 0) throw InvalidInput("FeatureMap: input dimension must be >= 1");
    FeatureMap map;
    map.kind_ = "full-quadratic";
    map.input_dim_ = input_dim;
    map.exponents_.push_back(std::vector<int>(input_dim, 0));
    for (std::size_t j = 0; j < input_dim; ++j) {
        std::vector<int> e(input_dim, 0);
        e[j] = 1;
        map.exponents_.push_back(e);
    }
    for (std::size_t j = 0; j < input_dim; ++j) {
        for (std::size_t k = j; k < input_dim; ++k) {
            std::vector<int> e(input_dim, 0);
            e[j] += 1;
            e[k] += 1;
            map.exponents_.push_back(e);
        }
    }
    return map;
}

FeatureMap FeatureMap::custom_monomials(std::size_t input_dim,
                                        std::vector<std::vector<int>> exponents) {
    if (input_dim == 0) throw InvalidInput("FeatureMap: input dimension must be >= 1");
    if (exponents.empty()) throw InvalidInput("FeatureMap: needs at least one feature");
    for (const auto& e : exponents) {
        if (e.size() != input_dim) {
            throw DimensionMismatch("FeatureMap: exponent row size " +
                                    std::to_string(e.size()) + " vs input dim " +
                                    std::to_string(input_dim));
        }
        for (int p : e)
            if (p < 0) throw InvalidInput("FeatureMap: exponents must be >= 0");
    }
    for (int p : exponents.front())
        if (p != 0) throw InvalidInput("FeatureMap: first feature must be the constant 1");
    FeatureMap map;
    map.kind_ = "custom-monomials";
    map.input_dim_ = input_dim;
    map.exponents_ = std::move(exponents);
    return map;
}

void FeatureMap::enable_standardization(const InputDistribution& dist) {
    if (dist.dim() != input_dim_) {
        throw DimensionMismatch("enable_standardization: distribution dim " +
                                std::to_string(dist.dim()) + " vs map input dim " +
                                std::to_string(input_dim_));
    }
    standardized_ = true;
    scale_.resize(input_dim_);
    shift_.resize(input_dim_);
    for (std::size_t i = 0; i < input_dim_; ++i) {
        const auto& c = dist.coordinate(i);
        scale_[i] = 2.0 / (c.hi - c.lo);
        shift_[i] = -(c.hi + c.lo) / (c.hi - c.lo);
    }
}

linalg::Vector FeatureMap::eval(const linalg::Vector& z) const {
    if (z.dim() != input_dim_) {
        throw DimensionMismatch("eval_features: input dim " + std::to_string(z.dim()) +
                                " vs map input dim " + std::to_string(input_dim_));
    }
    linalg::Vector t(input_dim_);
    for (std::size_t i = 0; i < input_dim_; ++i) {
        t[i] = standardized_ ? scale_[i] * z[i] + shift_[i] : z[i];
    }
    linalg::Vector x(output_dim());
    for (std::size_t f = 0; f < output_dim(); ++f) {
        double v = 1.0;
        for (std::size_t c = 0; c < input_dim_; ++c) {
            for (int p = 0; p < exponents_[f][c]; ++p) v *= t[c];
        }
        x[f] = v;
    }
    return x;
}

linalg::Vector eval_features(const FeatureMap& map, const linalg::Vector& z) {
    return map.eval(z);
}

namespace {

long long binom(int n, int k) {
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

linalg::SymMatrix exact_cxx(const FeatureMap& map, const InputDistribution& dist) {
    if (dist.dim() != map.input_dim()) {
        throw DimensionMismatch("exact_cxx: distribution dim " + std::to_string(dist.dim()) +
                                " vs map input dim " + std::to_string(map.input_dim()));
    }
    const std::size_t p = map.input_dim();
    const std::size_t d = map.output_dim();

    // Per-coordinate moments of the (possibly standardized) variable, up to
    // twice the largest feature exponent. E[(a z + b)^k] expands binomially
    // over the closed-form raw moments.
    int max_exp = 0;
    for (const auto& e : map.exponents())
        for (int v : e) max_exp = std::max(max_exp, v);
    const int max_k = 2 * max_exp;

    std::vector<std::vector<double>> moment(p, std::vector<double>(max_k + 1, 1.0));
    for (std::size_t c = 0; c < p; ++c) {
        for (int k = 1; k <= max_k; ++k) {
            if (map.standardized()) {
                const double a = map.scale_[c];
                const double b = map.shift_[c];
                double acc = 0.0;
                for (int j = 0; j <= k; ++j) {
                    acc += static_cast<double>(binom(k, j)) * std::pow(a, j) *
                           std::pow(b, k - j) * dist.raw_moment(c, j);
                }
                moment[c][k] = acc;
            } else {
                moment[c][k] = dist.raw_moment(c, k);
            }
        }
    }

    linalg::GenMatrix m(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double v = 1.0;
            for (std::size_t c = 0; c < p; ++c) {
                v *= moment[c][map.exponents()[i][c] + map.exponents()[j][c]];
            }
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return linalg::SymMatrix::from_general(m);
}

linalg::SymMatrix sample_cxx(const FeatureMap& map, std::span<const linalg::Vector> inputs) {
    if (inputs.empty()) throw EmptyInput("sample_cxx: no input samples");
    const std::size_t d = map.output_dim();
    linalg::GenMatrix acc(d, d);
    for (const linalg::Vector& z : inputs) {
        const linalg::Vector x = map.eval(z);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) acc(i, j) += x[i] * x[j];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(inputs.size());
    linalg::GenMatrix m(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            m(i, j) = acc(i, j) * inv_n;
            m(j, i) = m(i, j);
        }
    }
    return linalg::SymMatrix::from_general(m);
}

}  // namespace mflr::features
