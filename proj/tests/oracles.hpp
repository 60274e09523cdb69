#pragma once

// Independent reference computations for the test suites. Nothing here
// calls into the library's numerical kernels.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace oracle {

// Number of eigenvalues of the symmetric tridiagonal (d, e) below lambda,
// from sign changes of the characteristic-polynomial sequence
// p_k = (d_k - lambda) p_{k-1} - e_{k-1}^2 p_{k-2}, in long double with
// rescaling to avoid overflow.
inline std::size_t charpoly_count(const std::vector<double>& d, const std::vector<double>& e, double lambda) {
    long double p_prev = 1.0L, p = d[0] - static_cast<long double>(lambda);
    std::size_t count = p < 0 ? 1 : 0;
    int sign_prev = 1;
    int sign = p < 0 ? -1 : (p > 0 ? 1 : sign_prev);
    for (std::size_t k = 1; k < d.size(); ++k) {
        long double e2 = static_cast<long double>(e[k - 1]) * e[k - 1];
        long double next = (d[k] - static_cast<long double>(lambda)) * p - e2 * p_prev;
        p_prev = p;
        p = next;
        long double scale = std::fabs(p) + std::fabs(p_prev);
        if (scale > 1e100L || (scale < 1e-100L && scale > 0)) {
            p /= scale;
            p_prev /= scale;
        }
        int s = p < 0 ? -1 : (p > 0 ? 1 : -sign);  // zero takes the opposite sign of its predecessor
        if (s != sign) ++count;
        sign = s;
    }
    return count;
}

// Number of eigenvalues of the dense symmetric matrix a (row-major, n x n)
// below lambda, as the count of negative pivots of A - lambda I in an LDL^T
// factorisation without pivoting (Sylvester inertia).
inline std::size_t inertia_count(const std::vector<double>& a, std::size_t n, double lambda) {
    std::vector<long double> m(a.begin(), a.end());
    for (std::size_t i = 0; i < n; ++i) m[i * n + i] -= lambda;
    std::size_t neg = 0;
    for (std::size_t k = 0; k < n; ++k) {
        long double piv = m[k * n + k];
        if (piv == 0.0L) piv = 1e-300L;
        if (piv < 0) ++neg;
        for (std::size_t i = k + 1; i < n; ++i) {
            long double f = m[i * n + k] / piv;
            for (std::size_t j = k + 1; j < n; ++j) m[i * n + j] -= f * m[k * n + j];
        }
    }
    return neg;
}

template <class Count>
std::vector<double> bisect_all(std::size_t n, double lo, double hi, Count count) {
    std::vector<double> out;
    for (std::size_t k = 0; k < n; ++k) {
        double a = lo, b = hi;
        for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
            double mid = 0.5 * (a + b);
            if (count(mid) > k) b = mid;
            else a = mid;
        }
        out.push_back(0.5 * (a + b));
    }
    return out;
}

// Eigenvalues of the N-point Dirichlet stencil (a, b, a, ...) with diagonal a
// and off-diagonal b: a + 2 b cos(j pi / (N + 1)), ascending for b < 0.
inline std::vector<double> stencil_eigenvalues(std::size_t n, double a, double b) {
    std::vector<double> out;
    for (std::size_t j = 1; j <= n; ++j)
        out.push_back(a + 2.0 * b * std::cos(static_cast<double>(j) * std::numbers::pi / static_cast<double>(n + 1)));
    return out;
}

// Free massive particle on the split-difference lattice (W = U = 0):
// E_j^2 = m^2 + k_j^2 with k_j = (2/h) sin((2j-1) pi / (2 (2N+1))), the
// singular values of the forward-difference matrix.
inline double lattice_free_energy(double mass, double half_width, std::size_t n, int j) {
    const double h = 2.0 * half_width / static_cast<double>(n + 1);
    const double k = (2.0 / h) * std::sin((2.0 * j - 1.0) * std::numbers::pi / (2.0 * (2.0 * n + 1.0)));
    return std::sqrt(mass * mass + k * k);
}

// Linear family, W = w1 x, U = kappa W: E^2 = (1-k^2)(2 w1 sqrt(1-k^2) n + m^2).
inline double linear_level(double mass, double w1, double kappa, int n_sigma) {
    const double g = 1.0 - kappa * kappa;
    return std::sqrt(g * (2.0 * w1 * std::sqrt(g) * n_sigma + mass * mass));
}

// Tangent family on (-pi/2, pi/2). With W~ = a tan x + b (a = a0 sqrt(1-k^2),
// b = k E / sqrt(1-k^2)) the trigonometric Rosen-Morse partner spectrum is
// eps_n = (a+n)^2 - a^2 + b^2 - a^2 b^2 / (a+n)^2; with eps = E^2/(1-k^2) - m^2
// this gives E^2 = (m^2 + (a+n)^2 - a^2) / (1 + a0^2 k^2 / (a+n)^2).
inline double tan_level(double mass, double alpha0, double kappa, int n_sigma) {
    const double a = alpha0 * std::sqrt(1.0 - kappa * kappa);
    const double an = a + n_sigma;
    return std::sqrt((mass * mass + an * an - a * a) / (1.0 + alpha0 * alpha0 * kappa * kappa / (an * an)));
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace oracle
