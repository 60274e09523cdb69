#pragma once

// Reduction of the Dirac problem to energy-dependent SUSY quantum mechanics.
//
// With U = kappa W, writing psi~ = chi(spin) phi(x) where chi is an
// eigenvector of (-sigma_z + i kappa sigma_x) with eigenvalue
// lambda = sigma sqrt(1 - kappa^2), the coordinate equation becomes
//
//     (p^2 + W~^2 + sigma W~') phi = eps phi,
//     W~  = sqrt(1-kappa^2) (W + kappa E / (1-kappa^2)),
//     eps = E^2 / (1-kappa^2) - m^2,
//
// which is nonlinear in E through W~.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "dirosc/errors.hpp"
#include "dirosc/linalg.hpp"
#include "dirosc/model.hpp"

namespace dirosc {

inline void require_subcritical(double kappa) {
    if (!(std::abs(kappa) < 1.0))
        throw CriticalFieldError("critical field: |kappa| = " + std::to_string(std::abs(kappa)) +
                                 " >= 1, no bound states and no SUSY reduction");
}

struct SpinEigenpair {
    int sigma = +1;
    double lambda = 1.0;
    std::array<std::complex<double>, 2> chi{};
    double residual = 0.0;  // ||(M - lambda) chi||
};

/// Eigenpairs of M = -sigma_z + i kappa sigma_x, sigma = +1 first.
inline std::array<SpinEigenpair, 2> spin_eigensystem(double kappa) {
    require_subcritical(kappa);
    using C = std::complex<double>;
    const double root = std::sqrt(1.0 - kappa * kappa);
    const C ik(0.0, kappa);
    std::array<SpinEigenpair, 2> out;
    for (int s : {+1, -1}) {
        SpinEigenpair& p = out[s == +1 ? 0 : 1];
        p.sigma = s;
        p.lambda = s * root;
        // Each form divides by 1 + |lambda|, never by a small number.
        std::array<C, 2> chi = s == +1 ? std::array<C, 2>{ik / (1.0 + p.lambda), C(1.0)}
                                       : std::array<C, 2>{C(1.0), -ik / (1.0 - p.lambda)};
        double norm = std::sqrt(std::norm(chi[0]) + std::norm(chi[1]));
        C first = std::abs(chi[0]) > 0.0 ? chi[0] : chi[1];
        C phase = std::conj(first) / std::abs(first);
        for (auto& c : chi) c = c * phase / norm;
        if (std::abs(chi[0]) > 0.0) chi[0] = C(chi[0].real(), 0.0);
        else chi[1] = C(chi[1].real(), 0.0);
        p.chi = chi;
        C r0 = -chi[0] + ik * chi[1] - p.lambda * chi[0];
        C r1 = ik * chi[0] + chi[1] - p.lambda * chi[1];
        p.residual = std::sqrt(std::norm(r0) + std::norm(r1));
    }
    return out;
}

inline const SpinEigenpair& spin_pair(const std::array<SpinEigenpair, 2>& pairs, int sigma) {
    return sigma == +1 ? pairs[0] : pairs[1];
}

/// W~ instantiated at one energy. Linear: slope (x + shift); Tangent:
/// alpha tan x + beta; Tabulated: the defining combination directly.
class EffectiveSuperpotential {
public:
    EffectiveSuperpotential(Superpotential base, double kappa, double energy)
        : base_(std::move(base)), kappa_(kappa), energy_(energy) {
        require_subcritical(kappa);
        root_ = std::sqrt(1.0 - kappa * kappa);
        offset_ = kappa * energy / (1.0 - kappa * kappa);
        switch (base_.family()) {
        case Family::Linear:
            slope_ = root_ * base_.w1();
            shift_ = offset_ / base_.w1();
            break;
        case Family::Tangent:
            alpha_ = base_.alpha0() * root_;
            beta_ = kappa * energy / root_;
            break;
        case Family::Tabulated: break;
        }
    }

    const Superpotential& base() const { return base_; }
    double kappa() const { return kappa_; }
    double energy() const { return energy_; }
    double slope() const { return slope_; }
    double shift() const { return shift_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    SuperpotentialValue operator()(double x) const {
        switch (base_.family()) {
        case Family::Linear: return {slope_ * (x + shift_), slope_};
        case Family::Tangent: {
            if (!base_.contains(x))
                throw DomainError("x = " + std::to_string(x) + " outside the tan superpotential domain");
            double c = std::cos(x);
            return {alpha_ * std::tan(x) + beta_, alpha_ / (c * c)};
        }
        case Family::Tabulated: return defining(x);
        }
        return {0.0, 0.0};
    }

    /// sqrt(1-kappa^2) (W + kappa E/(1-kappa^2)) from the base superpotential.
    SuperpotentialValue defining(double x) const {
        auto v = base_(x);
        return {root_ * (v.w + offset_), root_ * v.wprime};
    }

private:
    Superpotential base_;
    double kappa_;
    double energy_;
    double root_ = 1.0;
    double offset_ = 0.0;
    double slope_ = 0.0, shift_ = 0.0;
    double alpha_ = 0.0, beta_ = 0.0;
};

inline EffectiveSuperpotential effective_superpotential(const Superpotential& sp, double kappa, double energy) {
    return EffectiveSuperpotential(sp, kappa, energy);
}

inline double epsilon_from_E(double energy, double kappa, double mass) {
    require_subcritical(kappa);
    return energy * energy / (1.0 - kappa * kappa) - mass * mass;
}

/// Returns (+E, -E).
inline std::pair<double, double> E_from_epsilon(double epsilon, double kappa, double mass) {
    require_subcritical(kappa);
    double s = epsilon + mass * mass;
    if (s < 0.0)
        throw NoRealEnergyError("eps + m^2 = " + std::to_string(s) + " < 0 has no real energy");
    double e = std::sqrt((1.0 - kappa * kappa) * s);
    return {e, -e};
}

/// W~^2 + sigma W~'.
inline double susy_potential(const EffectiveSuperpotential& weff, int sigma, double x) {
    auto v = weff(x);
    return v.w * v.w + sigma * v.wprime;
}

/// (1-kappa^2) W^2 + 2 E kappa W + sigma sqrt(1-kappa^2) W', the potential
/// of the squared equation before completing the square.
inline double squared_potential(const Superpotential& sp, double kappa, double energy, int sigma, double x) {
    require_subcritical(kappa);
    auto v = sp(x);
    return (1.0 - kappa * kappa) * v.w * v.w + 2.0 * energy * kappa * v.w +
           sigma * std::sqrt(1.0 - kappa * kappa) * v.wprime;
}

inline linalg::Tridiagonal schrodinger_operator(const EffectiveSuperpotential& weff, int sigma, const Grid& grid) {
    if (sigma != 1 && sigma != -1) throw ConfigError("sigma must be +1 or -1");
    const auto& sp = weff.base();
    if (!sp.contains(grid.x(0)) || !sp.contains(grid.x(grid.size() - 1)))
        throw DomainError("grid leaves the " + std::string(to_string(sp.family())) + " superpotential domain");
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    const double inv_h2 = 1.0 / (h * h);
    linalg::Tridiagonal t;
    t.diag.resize(n);
    t.offdiag.assign(n - 1, -inv_h2);
    for (std::size_t i = 0; i < n; ++i) t.diag[i] = 2.0 * inv_h2 + susy_potential(weff, sigma, grid.x(i));
    return t;
}

struct SusyOptions {
    bool richardson = true;  // two-grid (h, h/2) extrapolation of eps_n
    double e_max = 0.0;      // scan limit for |E|; 0 picks max(4 |E_guess|, 20 max(m, 1))
    double scan_step = 0.0;  // 0 picks m/4 (0.25 when m = 0)
};

namespace detail {

inline double nth_eigenvalue(const linalg::Tridiagonal& t, int n) {
    auto k = static_cast<std::size_t>(n) + 1;
    return linalg::eigen_bisect(t, k, k).front();
}

struct SusyEval {
    double eps;      // extrapolated when requested
    double eps_raw;  // on the given grid
};

inline SusyEval susy_eps(const PhysicalParams& p, int sigma, int n, double energy, const Grid& grid, bool richardson) {
    auto weff = effective_superpotential(p.superpotential, p.kappa, energy);
    double e1 = nth_eigenvalue(schrodinger_operator(weff, sigma, grid), n);
    if (!richardson) return {e1, e1};
    double e2 = nth_eigenvalue(schrodinger_operator(weff, sigma, grid.refined()), n);
    return {(4.0 * e2 - e1) / 3.0, e1};
}

}  // namespace detail

/// One branch of the nonlinear level problem: the root of
/// f(E) = eps_n(W~(E)) - (E^2/(1-kappa^2) - m^2) on the requested sign of E.
/// `guess` is an analytic estimate of |E| (0 when none is available).
inline SpectrumRecord solve_nonlinear_branch(const PhysicalParams& params, int sigma, int n, Branch branch,
                                             const Grid& grid, double guess = 0.0, const SusyOptions& opt = {}) {
    params.validate();
    require_subcritical(params.kappa);
    if (sigma != 1 && sigma != -1) throw ConfigError("sigma must be +1 or -1");
    if (n < 0) throw ConfigError("level index n must be >= 0");
    if (static_cast<std::size_t>(n) >= grid.size()) throw ConfigError("level index exceeds the grid size");
    const double sign = sign_of(branch);
    const double m = params.mass;
    auto f = [&](double t) {
        double e = sign * t;
        return detail::susy_eps(params, sigma, n, e, grid, opt.richardson).eps - epsilon_from_E(e, params.kappa, m);
    };

    std::optional<std::pair<double, double>> bracket;
    double f_lo = 0.0, f_hi = 0.0;
    if (guess > 0.0) {
        double a = 0.75 * guess, b = 1.25 * guess;
        double fa = f(a), fb = f(b);
        if (fa * fb <= 0.0) {
            bracket = {a, b};
            f_lo = fa;
            f_hi = fb;
        }
    }
    if (!bracket) {
        const double step = opt.scan_step > 0.0 ? opt.scan_step : (m > 0.0 ? m / 4.0 : 0.25);
        const double e_max = opt.e_max > 0.0 ? opt.e_max : std::max(4.0 * guess, 20.0 * std::max(m, 1.0));
        double a = 1e-3 * step;
        double fa = f(a);
        for (double b = step; b <= e_max + 0.5 * step; b += step) {
            double fb = f(b);
            if (fa * fb <= 0.0) {
                bracket = {a, b};
                f_lo = fa;
                f_hi = fb;
                break;
            }
            a = b;
            fa = fb;
        }
    }
    if (!bracket)
        throw BracketError("no sign change of f(E) for sigma=" + std::to_string(sigma) + ", n=" + std::to_string(n) +
                           " on the " + to_string(branch) + " branch");

    double root;
    if (f_lo == 0.0) {
        root = bracket->first;
    } else if (f_hi == 0.0) {
        root = bracket->second;
    } else {
        std::uintmax_t iters = 200;
        auto r = boost::math::tools::toms748_solve(f, bracket->first, bracket->second, f_lo, f_hi,
                                                    boost::math::tools::eps_tolerance<double>(48), iters);
        root = 0.5 * (r.first + r.second);
        if (iters >= 200) throw ConvergenceError("nonlinear level solve did not converge");
    }

    const double energy = sign * root;
    auto ev = detail::susy_eps(params, sigma, n, energy, grid, opt.richardson);
    SpectrumRecord rec;
    rec.route = Route::Susy;
    rec.branch = branch;
    rec.sigma = sigma;
    rec.n = n;
    rec.n_sigma = n_sigma_of(n, sigma);
    rec.energy = energy;
    rec.epsilon = ev.eps;
    rec.converged = true;
    // First-order shift of the root if the unextrapolated eigenvalue were used.
    double slope = 2.0 * std::abs(energy) / (1.0 - params.kappa * params.kappa);
    rec.err_est = slope > 0.0 ? std::abs(ev.eps - ev.eps_raw) / slope : std::abs(ev.eps - ev.eps_raw);
    return rec;
}

struct SusyLevelPair {
    SpectrumRecord plus;
    SpectrumRecord minus;
};

/// Both branches, each solved independently.
inline SusyLevelPair solve_nonlinear_level(const PhysicalParams& params, int sigma, int n, const Grid& grid,
                                           double guess = 0.0, const SusyOptions& opt = {}) {
    return {solve_nonlinear_branch(params, sigma, n, Branch::Plus, grid, guess, opt),
            solve_nonlinear_branch(params, sigma, n, Branch::Minus, grid, guess, opt)};
}

/// n-th eigenfunction of the instantiated operator, h * sum phi^2 = 1, with
/// its largest-magnitude sample positive.
inline std::vector<double> susy_eigenfunction(const PhysicalParams& params, int sigma, int n, double energy,
                                              const Grid& grid) {
    auto weff = effective_superpotential(params.superpotential, params.kappa, energy);
    auto t = schrodinger_operator(weff, sigma, grid);
    double eps = detail::nth_eigenvalue(t, n);
    auto v = linalg::inverse_iteration(t, eps, {});
    auto big = std::max_element(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    double s = (*big < 0.0 ? -1.0 : 1.0) / std::sqrt(grid.spacing());
    for (auto& x : v) x *= s;
    return v;
}

struct Reconstruction {
    SpinorState state;
    double raw_norm = 0.0;  // sqrt(h sum |psi|^2) before normalisation
    double residual = 0.0;  // ||(H - E) psi||, h-weighted, normalised psi
};

namespace detail {

using CVec = std::vector<std::complex<double>>;

inline CVec centred_derivative(const CVec& f, double h) {
    const std::size_t n = f.size();
    CVec d(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::complex<double> left = i > 0 ? f[i - 1] : 0.0;
        std::complex<double> right = i + 1 < n ? f[i + 1] : 0.0;
        d[i] = (right - left) / (2.0 * h);
    }
    return d;
}

// psi1 = -i b' + i W b + m a + c a,  psi2 = -i a' - i W a - m b + c b,
// with c = E - U (plus_E = +1) or c = U - E (plus_E = -1, the H - E form).
inline std::pair<CVec, CVec> first_order(const PhysicalParams& p, const Grid& grid, const CVec& a, const CVec& b,
                                         double energy, double plus_e) {
    const std::size_t n = grid.size();
    const std::complex<double> I(0.0, 1.0);
    auto da = centred_derivative(a, grid.spacing());
    auto db = centred_derivative(b, grid.spacing());
    CVec p1(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) {
        double w = p.superpotential(grid.x(i)).w;
        double c = plus_e * (energy - p.kappa * w);
        p1[i] = -I * db[i] + I * w * b[i] + p.mass * a[i] + c * a[i];
        p2[i] = -I * da[i] - I * w * a[i] - p.mass * b[i] + c * b[i];
    }
    return {p1, p2};
}

}  // namespace detail

inline double annihilation_threshold(const Grid& grid) {
    return std::max(1e-8, 10.0 * grid.spacing() * grid.spacing());
}

/// Applies (sigma_x p - sigma_y W + m sigma_z + E - U) to chi phi(x).
inline Reconstruction reconstruct_spinor(const PhysicalParams& params, double energy, const SpinEigenpair& chi,
                                         std::span<const double> phi, const Grid& grid) {
    if (phi.size() != grid.size()) throw ConfigError("phi does not match the grid");
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    detail::CVec a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = chi.chi[0] * phi[i];
        b[i] = chi.chi[1] * phi[i];
    }
    auto [p1, p2] = detail::first_order(params, grid, a, b, energy, 1.0);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm2 += h * (std::norm(p1[i]) + std::norm(p2[i]));
    Reconstruction out;
    out.raw_norm = std::sqrt(norm2);
    const double scale = std::max(1.0, std::abs(energy) + params.mass);
    if (out.raw_norm < annihilation_threshold(grid) * scale)
        throw DegenerateStateError("the first-order map annihilates this level (|psi| = " +
                                   std::to_string(out.raw_norm) + ")");
    for (std::size_t i = 0; i < n; ++i) {
        p1[i] /= out.raw_norm;
        p2[i] /= out.raw_norm;
    }
    auto [r1, r2] = detail::first_order(params, grid, p1, p2, energy, -1.0);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += h * (std::norm(r1[i]) + std::norm(r2[i]));
    out.residual = std::sqrt(res);

    SpinorState& s = out.state;
    s.energy = energy;
    s.upper = std::move(p1);
    s.lower = std::move(p2);
    s.norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) s.norm += h * (std::norm(s.upper[i]) + std::norm(s.lower[i]));
    return out;
}

/// |<a|b>| with the h-weighted inner product.
inline double spinor_overlap(const SpinorState& a, const SpinorState& b, const Grid& grid) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        acc += std::conj(a.upper[i]) * b.upper[i] + std::conj(a.lower[i]) * b.lower[i];
    return std::abs(acc) * grid.spacing();
}

}  // namespace dirosc
