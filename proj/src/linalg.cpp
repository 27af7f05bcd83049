#include "mflr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mflr::linalg {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* where) {
    if (a != b) {
        throw DimensionMismatch(std::string(where) + ": " + std::to_string(a) +
                                " vs " + std::to_string(b));
    }
}

}  // namespace

double Vector::dot(const Vector& other) const {
    require_same_dim(dim(), other.dim(), "Vector::dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) acc += data_[i] * other.data_[i];
    return acc;
}

double Vector::norm2() const {
    double acc = 0.0;
    for (double v : data_) acc += v * v;
    return std::sqrt(acc);
}

Vector& Vector::operator+=(const Vector& other) {
    require_same_dim(dim(), other.dim(), "Vector::operator+=");
    for (std::size_t i = 0; i < dim(); ++i) data_[i] += other.data_[i];
    return *this;
}

Vector& Vector::operator-=(const Vector& other) {
    require_same_dim(dim(), other.dim(), "Vector::operator-=");
    for (std::size_t i = 0; i < dim(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Vector& Vector::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator*(double s, Vector v) { return v *= s; }

Vector GenMatrix::operator*(const Vector& v) const {
    require_same_dim(cols_, v.dim(), "GenMatrix*Vector");
    Vector out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[j];
        out[i] = acc;
    }
    return out;
}

GenMatrix GenMatrix::operator*(const GenMatrix& other) const {
    require_same_dim(cols_, other.rows_, "GenMatrix*GenMatrix");
    GenMatrix out(rows_, other.cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = (*this)(i, k);
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < other.cols_; ++j) out(i, j) += a * other(k, j);
        }
    }
    return out;
}

GenMatrix GenMatrix::transposed() const {
    GenMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
}

GenMatrix& GenMatrix::operator+=(const GenMatrix& other) {
    require_same_dim(rows_, other.rows_, "GenMatrix::operator+= rows");
    require_same_dim(cols_, other.cols_, "GenMatrix::operator+= cols");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

GenMatrix& GenMatrix::operator-=(const GenMatrix& other) {
    require_same_dim(rows_, other.rows_, "GenMatrix::operator-= rows");
    require_same_dim(cols_, other.cols_, "GenMatrix::operator-= cols");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

GenMatrix& GenMatrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

GenMatrix GenMatrix::identity(std::size_t n) {
    GenMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

GenMatrix operator+(GenMatrix a, const GenMatrix& b) { return a += b; }
GenMatrix operator-(GenMatrix a, const GenMatrix& b) { return a -= b; }
GenMatrix operator*(double s, GenMatrix m) { return m *= s; }

SymMatrix SymMatrix::identity(std::size_t dim) {
    SymMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
    return m;
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
    SymMatrix m(d.dim());
    for (std::size_t i = 0; i < d.dim(); ++i) m.set(i, i, d[i]);
    return m;
}

SymMatrix SymMatrix::from_general(const GenMatrix& m, double tol) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatch("SymMatrix::from_general: matrix is " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    const std::size_t n = m.rows();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(m(i, j)));
    SymMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double asym = std::abs(m(i, j) - m(j, i));
            if (asym > tol * std::max(scale, 1.0)) {
                throw InvalidInput("SymMatrix::from_general: asymmetry " +
                                   std::to_string(asym) + " at (" + std::to_string(i) +
                                   "," + std::to_string(j) + ")");
            }
            out.set(i, j, 0.5 * (m(i, j) + m(j, i)));
        }
    }
    return out;
}

GenMatrix SymMatrix::as_general() const {
    GenMatrix out(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) out(i, j) = (*this)(i, j);
    return out;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
    require_same_dim(dim_, other.dim_, "SymMatrix::operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator*(double s, SymMatrix m) { return m *= s; }

CholeskyFactor::CholeskyFactor(const SymMatrix& m, double min_pivot_ratio)
    : dim_(m.dim()), lower_(dim_ * dim_, 0.0) {
    double max_diag = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) max_diag = std::max(max_diag, std::abs(m(j, j)));
    const double floor = min_pivot_ratio * max_diag;
    for (std::size_t j = 0; j < dim_; ++j) {
        double diag = m(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= lower_[j * dim_ + k] * lower_[j * dim_ + k];
        if (diag <= floor || !std::isfinite(diag)) {
            throw NotPositiveDefinite("Cholesky pivot " + std::to_string(diag) +
                                      " at column " + std::to_string(j));
        }
        const double ljj = std::sqrt(diag);
        lower_[j * dim_ + j] = ljj;
        for (std::size_t i = j + 1; i < dim_; ++i) {
            double acc = m(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= lower_[i * dim_ + k] * lower_[j * dim_ + k];
            lower_[i * dim_ + j] = acc / ljj;
        }
    }
}

Vector CholeskyFactor::solve(const Vector& b) const {
    require_same_dim(dim_, b.dim(), "CholeskyFactor::solve");
    Vector y(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        double acc = b[i];
        for (std::size_t k = 0; k < i; ++k) acc -= lower_[i * dim_ + k] * y[k];
        y[i] = acc / lower_[i * dim_ + i];
    }
    Vector x(dim_);
    for (std::size_t ii = dim_; ii-- > 0;) {
        double acc = y[ii];
        for (std::size_t k = ii + 1; k < dim_; ++k) acc -= lower_[k * dim_ + ii] * x[k];
        x[ii] = acc / lower_[ii * dim_ + ii];
    }
    return x;
}

Vector spd_solve(const SymMatrix& m, const Vector& b) {
    if (m.dim() != b.dim()) {
        throw DimensionMismatch("spd_solve: matrix dim " + std::to_string(m.dim()) +
                                ", vector dim " + std::to_string(b.dim()));
    }
    return CholeskyFactor(m).solve(b);
}

Vector sym_eigvals(const SymMatrix& m) {
    const std::size_t n = m.dim();
    GenMatrix a = m.as_general();

    double frob = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) frob += a(i, j) * a(i, j);
    frob = std::sqrt(frob);
    const double thresh = 1e-12 * frob;

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
        if (off <= thresh) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= thresh) continue;
                const double theta = 0.5 * (a(q, q) - a(p, p)) / apq;
                double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                const double h = t * apq;
                a(p, p) -= h;
                a(q, q) += h;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = aip - s * (aiq + tau * aip);
                    a(p, i) = a(i, p);
                    a(i, q) = aiq + s * (aip - tau * aiq);
                    a(q, i) = a(i, q);
                }
            }
        }
    }

    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end(), std::greater<>());
    return Vector(std::move(eig));
}

double trace(const SymMatrix& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.dim(); ++i) acc += m(i, i);
    return acc;
}

double trace(const GenMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("trace: matrix not square");
    double acc = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, i);
    return acc;
}

GenMatrix sample_cov(std::span<const Vector> samples, std::span<const Vector> other) {
    const std::size_t n = samples.size();
    if (n != other.size()) {
        throw DimensionMismatch("sample_cov: list lengths " + std::to_string(n) + " vs " +
                                std::to_string(other.size()));
    }
    if (n < 2) throw InsufficientSamples("sample_cov needs n >= 2, got " + std::to_string(n));

    const std::size_t da = samples[0].dim();
    const std::size_t db = other[0].dim();
    for (const Vector& v : samples) require_same_dim(v.dim(), da, "sample_cov samples");
    for (const Vector& v : other) require_same_dim(v.dim(), db, "sample_cov other");

    Vector mean_a(da), mean_b(db);
    for (const Vector& v : samples) mean_a += v;
    for (const Vector& v : other) mean_b += v;
    mean_a *= 1.0 / static_cast<double>(n);
    mean_b *= 1.0 / static_cast<double>(n);

    GenMatrix cov(da, db);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t i = 0; i < da; ++i) {
            const double ai = samples[s][i] - mean_a[i];
            for (std::size_t j = 0; j < db; ++j) {
                cov(i, j) += ai * (other[s][j] - mean_b[j]);
            }
        }
    }
    cov *= 1.0 / static_cast<double>(n - 1);
    return cov;
}

}  // namespace mflr::linalg
