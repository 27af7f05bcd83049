#include "support/oracles.hpp"

#include <functional>

namespace oracle {

namespace {

// Abscissas/weights of the 20-point Gauss-Legendre rule on [-1,1].
constexpr std::array<double, 10> kNodes = {
    0.0765265211334973, 0.2277858511416451, 0.3737060887154195, 0.5108670019508271,
    0.6360536807265150, 0.7463319064601508, 0.8391169718222188, 0.9122344282513259,
    0.9639719272779138, 0.9931285991850949};
constexpr std::array<double, 10> kWeights = {
    0.1527533871307258, 0.1491729864726037, 0.1420961093183820, 0.1316886384491766,
    0.1181945319615184, 0.1019301198172404, 0.0832767415767048, 0.0626720483341091,
    0.0406014298003869, 0.0176140071391521};

}  // namespace

double integrate_0_5(const std::function<double(double)>& f) {
    const int panels = 40;
    const double width = 5.0 / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * width;
        const double half = 0.5 * width;
        for (std::size_t i = 0; i < kNodes.size(); ++i) {
            acc += kWeights[i] * half * (f(mid + half * kNodes[i]) + f(mid - half * kNodes[i]));
        }
    }
    return acc;
}

double exp_moment(int a, double b) {
    return integrate_0_5([a, b](double z) { return std::pow(z, a) * std::exp(b * z); }) / 5.0;
}

mflr::linalg::Vector gauss_solve(mflr::linalg::GenMatrix a, mflr::linalg::Vector b) {
    const std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        }
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(piv, c));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            b[r] -= f * b[col];
        }
    }
    mflr::linalg::Vector x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a(i, c) * x[c];
        x[i] = acc / a(i, i);
    }
    return x;
}

ExpOracle exp_oracle() {
    auto f = [](int k, double z) { return k == 1 ? 8.0 * std::exp(z) : 7.2 * std::exp(0.5 * z); };

    ExpOracle o;
    // E[z^a f_k] and E[z^a f_k f_l]
    auto ef = [&](int a, int k) {
        return integrate_0_5([&](double z) { return std::pow(z, a) * f(k, z); }) / 5.0;
    };
    auto eff = [&](int a, int k, int l) {
        return integrate_0_5([&](double z) { return std::pow(z, a) * f(k, z) * f(l, z); }) / 5.0;
    };

    const double var1 = eff(0, 1, 1) - ef(0, 1) * ef(0, 1);
    const double var2 = eff(0, 2, 2) - ef(0, 2) * ef(0, 2);
    o.sigma1 = std::sqrt(var1);
    o.sigma2 = std::sqrt(var2);
    o.rho12 = (eff(0, 1, 2) - ef(0, 1) * ef(0, 2)) / (o.sigma1 * o.sigma2);

    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            o.c11(i, j) = eff(i + j, 1, 1) - ef(i, 1) * ef(j, 1);
            o.c12(i, j) = eff(i + j, 1, 2) - ef(i, 1) * ef(j, 2);
            o.c22(i, j) = eff(i + j, 2, 2) - ef(i, 2) * ef(j, 2);
        }
    }
    for (int i = 0; i < 3; ++i) o.c_xy[i] = ef(i, 1);

    mflr::linalg::GenMatrix cxx(3, 3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) cxx(i, j) = exp_moment(i + j, 0.0);
    }
    o.c_xx = mflr::linalg::SymMatrix::from_general(cxx, 1e-12);
    o.beta_star = gauss_solve(cxx, o.c_xy);
    return o;
}

}  // namespace oracle
