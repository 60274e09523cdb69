#pragma once

// Real symmetric eigensolver kernels: dense/banded -> tridiagonal reduction
// (Householder), implicit-shift QL, Sturm-sequence counting and bisection,
// and inverse iteration for selected eigenvectors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dirosc/errors.hpp"

namespace dirosc::linalg {

/// Row-major dense matrix; used for accumulated transforms and eigenvectors
/// (stored as columns).
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct Tridiagonal {
    std::vector<double> diag;     // d[0..n-1]
    std::vector<double> offdiag;  // e[0..n-2], e[i] couples i and i+1

    std::size_t size() const { return diag.size(); }

    /// Max absolute row sum (infinity norm).
    double norm() const {
        const std::size_t n = diag.size();
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = std::abs(diag[i]);
            if (i > 0) row += std::abs(offdiag[i - 1]);
            if (i + 1 < n) row += std::abs(offdiag[i]);
            nrm = std::max(nrm, row);
        }
        return nrm;
    }

    /// y = T x
    std::vector<double> apply(std::span<const double> x) const {
        const std::size_t n = diag.size();
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += offdiag[i - 1] * x[i - 1];
            if (i + 1 < n) s += offdiag[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }

    void check() const {
        if (diag.empty()) throw ConfigError("tridiagonal matrix is empty");
        if (offdiag.size() + 1 != diag.size()) throw ConfigError("tridiagonal: offdiag must have n-1 entries");
        for (double v : diag)
            if (!std::isfinite(v)) throw ConfigError("tridiagonal: non-finite diagonal");
        for (double v : offdiag)
            if (!std::isfinite(v)) throw ConfigError("tridiagonal: non-finite off-diagonal");
    }
};

/// Symmetric matrix with b super-diagonals; only the upper band is stored,
/// row i holding A(i, i..i+b).
class SymmetricBanded {
public:
    SymmetricBanded(std::size_t n, std::size_t bandwidth)
        : n_(n), b_(bandwidth), band_(n * (bandwidth + 1), 0.0) {
        if (n == 0) throw ConfigError("banded matrix needs n >= 1");
        if (bandwidth >= n && n > 1) throw ConfigError("bandwidth must be < n");
    }

    std::size_t size() const { return n_; }
    std::size_t bandwidth() const { return b_; }

    double operator()(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        if (j - i > b_) return 0.0;
        return band_[i * (b_ + 1) + (j - i)];
    }

    void set(std::size_t i, std::size_t j, double v) {
        if (i > j) std::swap(i, j);
        if (j - i > b_) throw ConfigError("entry outside the band");
        band_[i * (b_ + 1) + (j - i)] = v;
    }

    DenseMatrix to_dense() const {
        DenseMatrix a(n_, n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i; j < std::min(n_, i + b_ + 1); ++j) a(i, j) = a(j, i) = (*this)(i, j);
        return a;
    }

private:
    std::size_t n_;
    std::size_t b_;
    std::vector<double> band_;
};

struct Tridiagonalization {
    Tridiagonal t;
    std::optional<DenseMatrix> q;  // Q^T A Q = T when accumulated
};

/// Reduce A to tridiagonal form. Bandwidth <= 1 is copied directly; wider
/// bands go through dense Householder reflections (O(n^3)), which is meant
/// for the modest sizes where a dense copy is affordable.
inline Tridiagonalization tridiagonalize(const SymmetricBanded& a, bool accumulate = false) {
    const std::size_t n = a.size();
    Tridiagonalization out;
    out.t.diag.resize(n);
    out.t.offdiag.resize(n > 0 ? n - 1 : 0);

    if (a.bandwidth() <= 1) {
        for (std::size_t i = 0; i < n; ++i) out.t.diag[i] = a(i, i);
        for (std::size_t i = 0; i + 1 < n; ++i) out.t.offdiag[i] = a.bandwidth() == 1 ? a(i, i + 1) : 0.0;
        if (accumulate) out.q = DenseMatrix::identity(n);
        return out;
    }

    DenseMatrix m = a.to_dense();
    DenseMatrix q = DenseMatrix::identity(n);
    std::vector<double> v(n), p(n), w(n);

    for (std::size_t k = 0; k + 2 < n; ++k) {
        const std::size_t len = n - k - 1;
        double sigma = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            v[i] = m(k + 1 + i, k);
            if (i > 0) sigma += v[i] * v[i];
        }
        if (sigma == 0.0) continue;  // column already reduced
        double x0 = v[0];
        double alpha = -std::copysign(std::sqrt(x0 * x0 + sigma), x0);
        v[0] = x0 - alpha;
        double vtv = v[0] * v[0] + sigma;
        double beta = 2.0 / vtv;

        // p = beta * A22 v ; w = p - (beta/2)(p.v) v ; A22 -= v w^T + w v^T
        double pv = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < len; ++j) s += m(k + 1 + i, k + 1 + j) * v[j];
            p[i] = beta * s;
            pv += p[i] * v[i];
        }
        for (std::size_t i = 0; i < len; ++i) w[i] = p[i] - 0.5 * beta * pv * v[i];
        for (std::size_t i = 0; i < len; ++i)
            for (std::size_t j = 0; j < len; ++j) m(k + 1 + i, k + 1 + j) -= v[i] * w[j] + w[i] * v[j];

        m(k + 1, k) = m(k, k + 1) = alpha;
        for (std::size_t i = 1; i < len; ++i) m(k + 1 + i, k) = m(k, k + 1 + i) = 0.0;

        if (accumulate) {
            for (std::size_t r = 0; r < n; ++r) {
                double s = 0.0;
                for (std::size_t j = 0; j < len; ++j) s += q(r, k + 1 + j) * v[j];
                s *= beta;
                for (std::size_t j = 0; j < len; ++j) q(r, k + 1 + j) -= s * v[j];
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) out.t.diag[i] = m(i, i);
    for (std::size_t i = 0; i + 1 < n; ++i) out.t.offdiag[i] = m(i + 1, i);
    if (accumulate) out.q = std::move(q);
    return out;
}

struct EigenSystem {
    std::vector<double> values;          // ascending
    std::optional<DenseMatrix> vectors;  // column j belongs to values[j]
};

inline constexpr int kMaxSweepsPerEigenvalue = 30;

/// Implicit-shift QL on a symmetric tridiagonal matrix.
inline EigenSystem eigen_ql(const Tridiagonal& t, bool want_vectors = false) {
    t.check();
    const std::size_t n = t.size();
    std::vector<double> d = t.diag;
    std::vector<double> e(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) e[i] = t.offdiag[i];
    DenseMatrix z;
    if (want_vectors) z = DenseMatrix::identity(n);
    constexpr double eps = std::numeric_limits<double>::epsilon();

    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m == l) break;
            if (iter++ == kMaxSweepsPerEigenvalue)
                throw ConvergenceError("eigen_ql: no convergence after " +
                                       std::to_string(kMaxSweepsPerEigenvalue) + " sweeps at index " +
                                       std::to_string(l));
            // Wilkinson-type shift from the leading 2x2 block.
            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, p = 0.0;
            bool deflated = false;
            for (std::size_t i = m; i-- > l;) {
                double f = s * e[i];
                double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if (want_vectors) {
                    for (std::size_t k = 0; k < n; ++k) {
                        double zf = z(k, i + 1);
                        z(k, i + 1) = s * z(k, i) + c * zf;
                        z(k, i) = c * z(k, i) - s * zf;
                    }
                }
            }
            if (deflated) continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        } while (m != l);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

    EigenSystem out;
    out.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) out.values[j] = d[order[j]];
    if (want_vectors) {
        DenseMatrix v(n, n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) v(k, j) = z(k, order[j]);
        out.vectors = std::move(v);
    }
    return out;
}

/// Number of eigenvalues strictly below lambda (Sturm sign count of the
/// LDL^T pivots of T - lambda I).
inline std::size_t sturm_count(const Tridiagonal& t, double lambda) {
    const std::size_t n = t.size();
    const double floor = 1e-300 * std::max(t.norm(), 1.0);
    auto guarded = [floor](double q) {
        if (std::abs(q) < floor) return q < 0.0 ? -floor : floor;
        return q;
    };
    std::size_t count = 0;
    double q = guarded(t.diag[0] - lambda);
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        double e = t.offdiag[i - 1];
        q = guarded(t.diag[i] - lambda - e * e / q);
        if (q < 0.0) ++count;
    }
    return count;
}

inline std::pair<double, double> gershgorin_bounds(const Tridiagonal& t) {
    const std::size_t n = t.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(t.offdiag[i - 1]);
        if (i + 1 < n) r += std::abs(t.offdiag[i]);
        lo = std::min(lo, t.diag[i] - r);
        hi = std::max(hi, t.diag[i] + r);
    }
    double pad = 4.0 * std::numeric_limits<double>::epsilon() * std::max(t.norm(), 1e-300) + 1e-300;
    return {lo - pad, hi + pad};
}

/// Eigenvalues k_lo..k_hi (1-based, inclusive, ascending) by bisection on
/// the Sturm count, each to relative width 1e-12.
inline std::vector<double> eigen_bisect(const Tridiagonal& t, std::size_t k_lo, std::size_t k_hi) {
    t.check();
    const std::size_t n = t.size();
    if (k_lo < 1 || k_lo > k_hi || k_hi > n)
        throw ConfigError("eigen_bisect: need 1 <= k_lo <= k_hi <= n");
    auto [glo, ghi] = gershgorin_bounds(t);
    const double abs_floor = 4.0 * std::numeric_limits<double>::epsilon() * t.norm();

    std::vector<double> out;
    out.reserve(k_hi - k_lo + 1);
    double lower = glo;  // eigenvalue k-1 bounds eigenvalue k from below
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
        double a = lower, b = ghi;
        while (true) {
            double width = b - a;
            double tol = std::max({4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)), abs_floor,
                                   std::numeric_limits<double>::min()});
            if (width <= tol) break;
            double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            if (sturm_count(t, mid) >= k)
                b = mid;
            else
                a = mid;
        }
        double value = 0.5 * (a + b);
        out.push_back(value);
        lower = a;
    }
    return out;
}

/// Eigenvector for an accurate eigenvalue estimate by inverse iteration with
/// a partially pivoted tridiagonal LU. Vectors in `deflate` (unit norm) are
/// projected out each step, which keeps clustered eigenvectors independent.
inline std::vector<double> inverse_iteration(const Tridiagonal& t, double lambda,
                                             std::span<const std::vector<double>> deflate = {},
                                             int iterations = 4) {
    const std::size_t n = t.size();
    if (n == 1) return {1.0};
    const double tiny = std::numeric_limits<double>::epsilon() * std::max(t.norm(), 1e-300);

    // LU of T - lambda I with row interchanges (dgttrf layout).
    std::vector<double> dl(t.offdiag), d(n), du(t.offdiag), du2(n, 0.0);
    std::vector<char> swapped(n, 0);
    for (std::size_t i = 0; i < n; ++i) d[i] = t.diag[i] - lambda;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            if (d[i] == 0.0) d[i] = tiny;
            double fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            double fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            double tmp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = tmp - fact * d[i + 1];
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
            swapped[i] = 1;
        }
    }
    for (auto& v : d)
        if (std::abs(v) < tiny) v = std::copysign(tiny, v == 0.0 ? 1.0 : v);

    auto solve = [&](std::vector<double>& b) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (swapped[i]) std::swap(b[i], b[i + 1]);
            b[i + 1] -= dl[i] * b[i];
        }
        b[n - 1] /= d[n - 1];
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for (std::size_t i = n - 2; i-- > 0;) b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    };
    auto normalize = [](std::vector<double>& x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        s = std::sqrt(s);
        if (s > 0.0)
            for (double& v : x) v /= s;
    };
    auto project_out = [&](std::vector<double>& x) {
        for (const auto& u : deflate) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += u[i] * x[i];
            for (std::size_t i = 0; i < n; ++i) x[i] -= dot * u[i];
        }
    };

    std::mt19937_64 rng(0x5eedULL + n);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = 1.0 + 0.25 * dist(rng);
    project_out(x);
    normalize(x);
    for (int it = 0; it < iterations; ++it) {
        solve(x);
        project_out(x);
        normalize(x);
    }
    return x;
}

}  // namespace dirosc::linalg
