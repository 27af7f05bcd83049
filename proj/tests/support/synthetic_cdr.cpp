#include "support/synthetic_cdr.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "mflr/rng.hpp"

namespace testsupport {

namespace {

struct Raw {
    std::vector<std::array<double, 5>> z;
    std::vector<double> t1, t2;
};

// Smooth correlated responses on the input box; their exact shape is
// irrelevant because the affine correction fixes the first two moments.
Raw draw_raw(std::size_t rows, unsigned long long seed) {
    mflr::rng::Rng gen(seed);
    Raw raw;
    raw.z.resize(rows);
    raw.t1.resize(rows);
    raw.t2.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const double a = std::exp(gen.uniform(std::log(5.5e11), std::log(1.5e12)));
        const double e = std::exp(gen.uniform(std::log(1.5e3), std::log(9.5e3)));
        const double ti = gen.uniform(200.0, 400.0);
        const double t0 = gen.uniform(850.0, 1000.0);
        const double phi = gen.uniform(0.5, 1.5);
        raw.z[i] = {a, e, ti, t0, phi};
        const double la = std::log(a / 5.5e11) / std::log(1.5e12 / 5.5e11);  // in [0,1]
        const double le = std::log(e / 1.5e3) / std::log(9.5e3 / 1.5e3);
        const double burn = std::exp(-2.2 * le) * (0.4 + 0.6 * la) * phi;
        raw.t1[i] = t0 + 420.0 * burn + 0.12 * ti + 35.0 * burn * burn;
        // The low-fidelity response sees a smeared reaction and a slightly
        // different input sensitivity, so the pair correlates without being
        // an affine transform of t1.
        const double burn2 = std::exp(-1.8 * le) * (0.55 + 0.45 * la) * (0.8 + 0.2 * phi);
        raw.t2[i] = t0 + 390.0 * burn2 + 0.05 * ti * phi;
    }
    return raw;
}

}  // namespace

std::string write_synthetic_cdr_dataset(const std::string& path, std::size_t rows,
                                        unsigned long long seed) {
    Raw raw = draw_raw(rows, seed);
    const double n = static_cast<double>(rows);

    // Sample moments of (t1, t2), 1/(n-1).
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        m1 += raw.t1[i];
        m2 += raw.t2[i];
    }
    m1 /= n;
    m2 /= n;
    double s11 = 0.0, s12 = 0.0, s22 = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double d1 = raw.t1[i] - m1;
        const double d2 = raw.t2[i] - m2;
        s11 += d1 * d1;
        s12 += d1 * d2;
        s22 += d2 * d2;
    }
    s11 /= n - 1.0;
    s12 /= n - 1.0;
    s22 /= n - 1.0;

    // Whiten with the Cholesky factor of the sample covariance, re-color with
    // the target covariance, shift to the target means. The written columns
    // then carry the target sample moments exactly.
    const double l11 = std::sqrt(s11);
    const double l21 = s12 / l11;
    const double l22 = std::sqrt(s22 - l21 * l21);
    const double t11 = kCdrSigma1;
    const double t21 = kCdrRho * kCdrSigma2;
    const double t22 = kCdrSigma2 * std::sqrt(1.0 - kCdrRho * kCdrRho);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset '" + path + "'");
    out << "z1,z2,z3,z4,z5,y1,y2\n";
    char buf[256];
    for (std::size_t i = 0; i < rows; ++i) {
        const double u1 = (raw.t1[i] - m1) / l11;
        const double u2 = ((raw.t2[i] - m2) - l21 * u1) / l22;
        const double y1 = kCdrMu1 + t11 * u1;
        const double y2 = kCdrMu2 + t21 * u1 + t22 * u2;
        std::snprintf(buf, sizeof(buf),
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", raw.z[i][0],
                      raw.z[i][1], raw.z[i][2], raw.z[i][3], raw.z[i][4], y1, y2);
        out << buf;
    }
    return path;
}

}  // namespace testsupport
