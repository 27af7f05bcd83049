#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "mflr/error.hpp"

namespace mflr::linalg {

/// Dense real vector. Entries must stay finite; summation order in reductions
/// is fixed left-to-right so results are bit-reproducible.
class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t dim, double value = 0.0) : data_(dim, value) {}
    Vector(std::initializer_list<double> init) : data_(init) {}
    explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

    std::size_t dim() const { return data_.size(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    const std::vector<double>& values() const { return data_; }
    std::vector<double>& values() { return data_; }

    double dot(const Vector& other) const;
    double norm2() const;

    Vector& operator+=(const Vector& other);
    Vector& operator-=(const Vector& other);
    Vector& operator*=(double s);

private:
    std::vector<double> data_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator*(double s, Vector v);

/// Dense rows x cols matrix, row-major.
class GenMatrix {
public:
    GenMatrix() = default;
    GenMatrix(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Vector operator*(const Vector& v) const;
    GenMatrix operator*(const GenMatrix& other) const;
    GenMatrix transposed() const;

    GenMatrix& operator+=(const GenMatrix& other);
    GenMatrix& operator-=(const GenMatrix& other);
    GenMatrix& operator*=(double s);

    static GenMatrix identity(std::size_t n);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

GenMatrix operator+(GenMatrix a, const GenMatrix& b);
GenMatrix operator-(GenMatrix a, const GenMatrix& b);
GenMatrix operator*(double s, GenMatrix m);

/// Symmetric matrix with full dense storage. Construction from general data
/// verifies symmetry to 1e-12 on the entry magnitude scale and then averages
/// the two triangles, so downstream factorizations see an exactly symmetric
/// operand.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t dim, double value = 0.0)
        : dim_(dim), data_(dim * dim, value) {}

    static SymMatrix identity(std::size_t dim);
    static SymMatrix diagonal(const Vector& d);
    /// Validates near-symmetry, then symmetrizes. Throws InvalidInput if the
    /// asymmetry exceeds 1e-12 * max|entry| or the matrix is not square.
    static SymMatrix from_general(const GenMatrix& m, double tol = 1e-12);

    std::size_t dim() const { return dim_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
    /// Sets both (i,j) and (j,i).
    void set(std::size_t i, std::size_t j, double v) {
        data_[i * dim_ + j] = v;
        data_[j * dim_ + i] = v;
    }

    GenMatrix as_general() const;

    SymMatrix& operator+=(const SymMatrix& other);
    SymMatrix& operator*=(double s);

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(double s, SymMatrix m);

/// Cholesky factorization M = L L^T of a symmetric positive definite matrix.
/// Throws NotPositiveDefinite when a pivot is <= 0, which is how degenerate
/// feature maps and singular sample covariances surface. min_pivot_ratio
/// tightens the test to pivot <= ratio * max diagonal, so numerically
/// singular matrices (rank-deficient sample covariances) are rejected instead
/// of factorized against rounding noise.
class CholeskyFactor {
public:
    explicit CholeskyFactor(const SymMatrix& m, double min_pivot_ratio = 0.0);
    Vector solve(const Vector& b) const;
    std::size_t dim() const { return dim_; }

private:
    std::size_t dim_;
    std::vector<double> lower_;  // row-major lower triangle, full storage
};

/// Solves M v = b for symmetric positive definite M via Cholesky.
Vector spd_solve(const SymMatrix& m, const Vector& b);

/// All eigenvalues of a symmetric matrix, descending, via cyclic Jacobi
/// rotations. Converges when every off-diagonal magnitude drops below
/// 1e-12 * ||M||_F.
Vector sym_eigvals(const SymMatrix& m);

/// Sum of diagonal entries, accumulated left-to-right.
double trace(const SymMatrix& m);
double trace(const GenMatrix& m);

/// Unbiased cross-covariance of two equally long sample lists with 1/(n-1)
/// normalization: result(i,j) = cov(samples[.][i], other[.][j]).
GenMatrix sample_cov(std::span<const Vector> samples, std::span<const Vector> other);

}  // namespace mflr::linalg
