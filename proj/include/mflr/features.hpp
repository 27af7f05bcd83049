#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mflr/linalg.hpp"
#include "mflr/rng.hpp"

namespace mflr::features {

enum class Marginal { Uniform, LogUniform };

struct CoordinateRange {
    Marginal kind = Marginal::Uniform;
    double lo = 0.0;
    double hi = 1.0;
};

/// Product distribution with independent uniform or log-uniform coordinates.
class InputDistribution {
public:
    InputDistribution() = default;
    explicit InputDistribution(std::vector<CoordinateRange> coords);

    static InputDistribution uniform(double lo, double hi, std::size_t p = 1);

    std::size_t dim() const { return coords_.size(); }
    const CoordinateRange& coordinate(std::size_t i) const { return coords_[i]; }

    /// E[Z_i^k] in raw coordinates, closed form. Uniform: (hi^{k+1}-lo^{k+1}) /
    /// ((k+1)(hi-lo)); log-uniform: (hi^k-lo^k)/(k ln(hi/lo)).
    double raw_moment(std::size_t i, int k) const;

    linalg::Vector draw(rng::Rng& gen) const;

private:
    std::vector<CoordinateRange> coords_;
};

/// Monomial feature map z -> x(z). The first feature is always the constant 1;
/// the full-quadratic ordering is fixed as (constant, linears in coordinate
/// order, quadratics in lexicographic pair order), so serialized coefficient
/// vectors are comparable across runs.
///
/// When standardization is enabled each coordinate is affinely mapped to
/// [-1,1] before monomials are formed; the flag is recorded so fit metadata
/// can report it.
class FeatureMap {
public:
    static FeatureMap full_quadratic(std::size_t input_dim);
    /// Custom monomial map; exponents[f][c] is the power of coordinate c in
    /// feature f. The first feature must be the constant (all exponents zero).
    static FeatureMap custom_monomials(std::size_t input_dim,
                                       std::vector<std::vector<int>> exponents);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return exponents_.size(); }
    const std::vector<std::vector<int>>& exponents() const { return exponents_; }

    bool standardized() const { return standardized_; }
    /// Turns on the affine [-1,1] standardization using the support of dist.
    void enable_standardization(const InputDistribution& dist);

    linalg::Vector eval(const linalg::Vector& z) const;

    std::string kind_name() const { return kind_; }

private:
    std::string kind_;
    std::size_t input_dim_ = 0;
    std::vector<std::vector<int>> exponents_;
    bool standardized_ = false;
    std::vector<double> scale_;   // t = scale*z + shift per coordinate
    std::vector<double> shift_;

    friend linalg::SymMatrix exact_cxx(const FeatureMap&, const InputDistribution&);
};

linalg::Vector eval_features(const FeatureMap& map, const linalg::Vector& z);

/// Exact moment matrix C_XX(i,j) = E[x_i(Z) x_j(Z)] from closed-form
/// per-coordinate moments. Supports product uniform / log-uniform inputs.
linalg::SymMatrix exact_cxx(const FeatureMap& map, const InputDistribution& dist);

/// Sample moment matrix (1/N) sum_i x(z_i) x(z_i)^T. Note the 1/N
/// normalization (moment-matrix convention), unlike linalg::sample_cov.
linalg::SymMatrix sample_cxx(const FeatureMap& map, std::span<const linalg::Vector> inputs);

}  // namespace mflr::features
