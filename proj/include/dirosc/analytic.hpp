#pragma once

// Closed-form spectra for the linear and tangent superpotentials.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "dirosc/errors.hpp"
#include "dirosc/model.hpp"

namespace dirosc {

enum class BoundState { Bound, Critical, Unbound };

inline const char* to_string(BoundState b) {
    switch (b) {
    case BoundState::Bound: return "bound";
    case BoundState::Critical: return "critical";
    case BoundState::Unbound: return "unbound";
    }
    return "?";
}

inline BoundState bound_state_domain(double kappa) {
    double a = std::abs(kappa);
    if (a < 1.0) return BoundState::Bound;
    if (a == 1.0) return BoundState::Critical;
    return BoundState::Unbound;
}

struct LevelIndex {
    int n = 0;
    int sigma = -1;

    LevelIndex(int n_, int sigma_) : n(n_), sigma(sigma_) {
        if (n < 0) throw ConfigError("level index n must be >= 0");
        if (sigma != 1 && sigma != -1) throw ConfigError("sigma must be +1 or -1");
    }
    static LevelIndex from_n_sigma(int n_sigma, int sigma) { return LevelIndex(n_sigma - (1 + sigma) / 2, sigma); }
    int n_sigma() const { return n_sigma_of(n, sigma); }
};

struct AnalyticLevel {
    double plus = 0.0;
    double minus = 0.0;
    double epsilon = 0.0;
    double residual = 0.0;  // relative residual of the quadratic in E^2 (tangent only)
};

namespace detail {

inline void require_bound(double kappa) {
    if (!(std::abs(kappa) < 1.0))
        throw CriticalFieldError("critical field: |kappa| = " + std::to_string(std::abs(kappa)) +
                                 " >= 1, no bound states");
}

}  // namespace detail

inline AnalyticLevel spectrum_linear(double mass, double w1, double kappa, const LevelIndex& idx) {
    detail::require_bound(kappa);
    if (!(w1 > 0.0)) throw ConfigError("w1 must be > 0");
    const double g = 1.0 - kappa * kappa;
    const double eps = w1 * std::sqrt(g) * 2.0 * idx.n_sigma();
    const double e = std::sqrt(g * (eps + mass * mass));
    return {e, -e, eps, 0.0};
}

/// Positive root of E^2 (1 + a0^2 k^2/(a - n)^2) = m^2 + a^2 - (a - n)^2,
/// a = a0 sqrt(1 - k^2).
inline AnalyticLevel spectrum_tan(double mass, double alpha0, double kappa, const LevelIndex& idx) {
    detail::require_bound(kappa);
    if (!(alpha0 > 0.0)) throw ConfigError("alpha0 must be > 0");
    const double root = std::sqrt(1.0 - kappa * kappa);
    const double alpha = alpha0 * root;
    const int ns = idx.n_sigma();
    if (!(ns < alpha))
        throw IndexOutOfRangeError("n_sigma = " + std::to_string(ns) + " is not below alpha = " +
                                   std::to_string(alpha));
    const double d = alpha - ns;
    const double numerator = mass * mass + alpha * alpha - d * d;
    if (numerator < 0.0) throw NoRealEnergyError("tan spectrum numerator is negative");
    const double c = alpha0 * alpha0 * kappa * kappa / (d * d);
    const double e2 = numerator / (1.0 + c);
    const double e = std::sqrt(e2);

    AnalyticLevel out;
    out.plus = e;
    out.minus = -e;
    const double beta = kappa * e / root;
    out.epsilon = alpha * alpha + beta * beta - d * d - alpha * alpha * beta * beta / (d * d);
    const double lhs = e * e + c * e * e;
    out.residual = std::abs(lhs - numerator) / std::max(std::abs(numerator), 1e-300);
    return out;
}

/// Dispatches on the certified families.
inline AnalyticLevel analytic_level(const PhysicalParams& params, const LevelIndex& idx) {
    const auto& sp = params.superpotential;
    switch (sp.family()) {
    case Family::Linear: return spectrum_linear(params.mass, sp.w1(), params.kappa, idx);
    case Family::Tangent: return spectrum_tan(params.mass, sp.alpha0(), params.kappa, idx);
    case Family::Tabulated: break;
    }
    throw ConfigError("tabulated superpotentials have no analytic spectrum");
}

/// Every level with n_sigma <= max_n (and n_sigma < alpha for tan), both
/// sigma and both branches, sorted by |E| then sigma.
inline std::vector<SpectrumRecord> full_spectrum(const PhysicalParams& params, int max_n) {
    params.validate();
    detail::require_bound(params.kappa);
    if (params.superpotential.family() == Family::Tabulated)
        throw ConfigError("tabulated superpotentials have no analytic spectrum");
    if (max_n < 0) throw ConfigError("max_n must be >= 0");
    std::vector<SpectrumRecord> out;
    for (int sigma : {-1, +1}) {
        for (int ns = (1 + sigma) / 2; ns <= max_n; ++ns) {
            auto idx = LevelIndex::from_n_sigma(ns, sigma);
            AnalyticLevel lv;
            try {
                lv = analytic_level(params, idx);
            } catch (const IndexOutOfRangeError&) {
                break;
            }
            for (Branch b : {Branch::Plus, Branch::Minus}) {
                SpectrumRecord r;
                r.route = Route::Analytic;
                r.branch = b;
                r.sigma = sigma;
                r.n = idx.n;
                r.n_sigma = ns;
                r.energy = b == Branch::Plus ? lv.plus : lv.minus;
                r.epsilon = lv.epsilon;
                r.converged = true;
                r.err_est = 0.0;
                out.push_back(r);
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const SpectrumRecord& a, const SpectrumRecord& b) {
        if (std::abs(a.energy) != std::abs(b.energy)) return std::abs(a.energy) < std::abs(b.energy);
        if (a.sigma != b.sigma) return a.sigma < b.sigma;
        return a.branch == Branch::Plus && b.branch == Branch::Minus;
    });
    return out;
}

struct Pairing {
    std::vector<std::pair<SpectrumRecord, SpectrumRecord>> pairs;  // (sigma=-1, sigma=+1)
    std::vector<SpectrumRecord> unpaired;
};

inline constexpr double kDegeneracyTolerance = 1e-6;

/// Pairs (sigma=-1, n_sigma=k) with (sigma=+1, n_sigma=k), k >= 1, when
/// |dE| <= 1e-6 max(|E|, 1). Records must come from one route and branch.
inline Pairing degenerate_pairs(const std::vector<SpectrumRecord>& records, double tol = kDegeneracyTolerance) {
    Pairing out;
    std::vector<bool> used(records.size(), false);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& a = records[i];
        if (used[i] || a.sigma != -1 || a.n_sigma < 1 || a.energy == 0.0) continue;
        for (std::size_t j = 0; j < records.size(); ++j) {
            const auto& b = records[j];
            if (used[j] || b.sigma != +1 || b.n_sigma != a.n_sigma || b.branch != a.branch) continue;
            if (std::abs(a.energy - b.energy) <= tol * std::max(std::abs(a.energy), 1.0)) {
                out.pairs.emplace_back(a, b);
                used[i] = used[j] = true;
                break;
            }
        }
    }
    for (std::size_t i = 0; i < records.size(); ++i)
        if (!used[i]) out.unpaired.push_back(records[i]);
    return out;
}

}  // namespace dirosc
