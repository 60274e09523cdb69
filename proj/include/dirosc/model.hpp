#pragma once

// Domain types shared by every solver route: the superpotential catalogue,
// physical parameters, the uniform interior grid and the spectrum records.
// Natural units (hbar = c = 1) throughout.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dirosc/errors.hpp"

namespace dirosc {

enum class Family { Linear, Tangent, Tabulated };

inline const char* to_string(Family f) {
    switch (f) {
    case Family::Linear: return "linear";
    case Family::Tangent: return "tan";
    case Family::Tabulated: return "tabulated";
    }
    return "?";
}

struct TableSample {
    double x;
    double w;
    double wprime;
};

struct SuperpotentialValue {
    double w;       // W(x)
    double wprime;  // dW/dx
};

/// W(x) descriptor. Linear and Tangent are the certified closed-form
/// families; Tabulated carries samples and is interpolated with a monotone
/// (Fritsch-Carlson) cubic.
class Superpotential {
public:
    static Superpotential linear(double w1) {
        if (!(w1 > 0.0) || !std::isfinite(w1))
            throw ConfigError("linear superpotential needs w1 > 0");
        Superpotential sp;
        sp.family_ = Family::Linear;
        sp.w1_ = w1;
        return sp;
    }

    static Superpotential tangent(double alpha0) {
        if (!(alpha0 > 0.0) || !std::isfinite(alpha0))
            throw ConfigError("tangent superpotential needs alpha0 > 0");
        Superpotential sp;
        sp.family_ = Family::Tangent;
        sp.alpha0_ = alpha0;
        return sp;
    }

    static Superpotential tabulated(std::vector<TableSample> samples) {
        validate_table(samples);
        Superpotential sp;
        sp.family_ = Family::Tabulated;
        sp.samples_ = std::move(samples);
        sp.slopes_ = pchip_slopes(sp.samples_);
        return sp;
    }

    /// Three whitespace-separated columns per line: x W W'. Lines starting
    /// with '#' and blank lines are skipped.
    static Superpotential load_table(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open superpotential table: " + path.string());
        std::vector<TableSample> samples;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            std::istringstream fields(line);
            TableSample s{};
            std::string extra;
            if (!(fields >> s.x >> s.w >> s.wprime) || (fields >> extra))
                throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected three numeric columns");
            samples.push_back(s);
        }
        return tabulated(std::move(samples));
    }

    Family family() const { return family_; }
    double w1() const { return w1_; }
    double alpha0() const { return alpha0_; }
    std::span<const TableSample> samples() const { return samples_; }

    /// Domain endpoints. Tangent is open, Tabulated closed, Linear unbounded.
    std::pair<double, double> domain() const {
        switch (family_) {
        case Family::Linear:
            return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        case Family::Tangent: return {-std::numbers::pi / 2, std::numbers::pi / 2};
        case Family::Tabulated: return {samples_.front().x, samples_.back().x};
        }
        return {0.0, 0.0};
    }

    bool contains(double x) const {
        if (!std::isfinite(x)) return false;
        auto [lo, hi] = domain();
        if (family_ == Family::Tangent) return x > lo && x < hi;
        return x >= lo && x <= hi;
    }

    SuperpotentialValue operator()(double x) const {
        if (!contains(x))
            throw DomainError("x = " + std::to_string(x) + " outside the " + to_string(family_) +
                              " superpotential domain");
        switch (family_) {
        case Family::Linear: return {w1_ * x, w1_};
        case Family::Tangent: {
            double c = std::cos(x);
            return {alpha0_ * std::tan(x), alpha0_ / (c * c)};
        }
        case Family::Tabulated: return interpolate(x);
        }
        return {0.0, 0.0};
    }

private:
    Superpotential() = default;

    static void validate_table(const std::vector<TableSample>& s) {
        if (s.size() < 3) throw ConfigError("tabulated superpotential needs at least 3 samples");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!std::isfinite(s[i].x) || !std::isfinite(s[i].w) || !std::isfinite(s[i].wprime))
                throw ConfigError("tabulated superpotential has non-finite entries");
            if (i > 0 && !(s[i].x > s[i - 1].x))
                throw ConfigError("tabulated superpotential: x must be strictly increasing");
        }
        // Supplied W' must agree with centred differences of W to O(h^2).
        double hmax = 0.0;
        double w2max = 0.0;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            double hl = s[i].x - s[i - 1].x;
            double hr = s[i + 1].x - s[i].x;
            hmax = std::max({hmax, hl, hr});
            double d2 = 2.0 * ((s[i + 1].w - s[i].w) / hr - (s[i].w - s[i - 1].w) / hl) / (hl + hr);
            w2max = std::max(w2max, std::abs(d2));
        }
        double bound = 10.0 * hmax * hmax * w2max;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            double fd = (s[i + 1].w - s[i - 1].w) / (s[i + 1].x - s[i - 1].x);
            double slack = 1e-9 * (1.0 + std::abs(s[i].wprime));
            if (std::abs(fd - s[i].wprime) > bound + slack)
                throw ConfigError("tabulated superpotential: W' at x = " + std::to_string(s[i].x) +
                                  " disagrees with the finite difference of W");
        }
    }

    // Fritsch-Carlson slopes with the shape-preserving one-sided end rule.
    static std::vector<double> pchip_slopes(const std::vector<TableSample>& s) {
        const std::size_t n = s.size();
        std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            h[k] = s[k + 1].x - s[k].x;
            delta[k] = (s[k + 1].w - s[k].w) / h[k];
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            if (delta[k - 1] * delta[k] <= 0.0) continue;
            double w1 = 2.0 * h[k] + h[k - 1];
            double w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
        auto edge = [](double h0, double h1, double m0, double m1) {
            double dd = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
            if (dd * m0 <= 0.0) return 0.0;
            if (m0 * m1 < 0.0 && std::abs(dd) > 3.0 * std::abs(m0)) return 3.0 * m0;
            return dd;
        };
        d[0] = edge(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        return d;
    }

    SuperpotentialValue interpolate(double x) const {
        auto it = std::upper_bound(samples_.begin(), samples_.end(), x,
                                   [](double v, const TableSample& s) { return v < s.x; });
        std::size_t k = (it == samples_.begin()) ? 0 : static_cast<std::size_t>(it - samples_.begin()) - 1;
        k = std::min(k, samples_.size() - 2);
        const auto& a = samples_[k];
        const auto& b = samples_[k + 1];
        double h = b.x - a.x;
        double t = (x - a.x) / h;
        double t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        double w = h00 * a.w + h10 * h * slopes_[k] + h01 * b.w + h11 * h * slopes_[k + 1];
        double dh00 = 6 * t2 - 6 * t, dh10 = 3 * t2 - 4 * t + 1;
        double dh01 = -6 * t2 + 6 * t, dh11 = 3 * t2 - 2 * t;
        double wp = (dh00 * a.w + dh01 * b.w) / h + dh10 * slopes_[k] + dh11 * slopes_[k + 1];
        return {w, wp};
    }

    Family family_ = Family::Linear;
    double w1_ = 1.0;
    double alpha0_ = 1.0;
    std::vector<TableSample> samples_;
    std::vector<double> slopes_;
};

inline SuperpotentialValue eval_superpotential(const Superpotential& sp, double x) { return sp(x); }

/// U(x) = kappa * W(x); the only electrostatic quantity in the model.
inline double potential_energy(const Superpotential& sp, double kappa, double x) {
    return kappa * sp(x).w;
}

struct PhysicalParams {
    double mass = 1.0;
    double kappa = 0.0;
    Superpotential superpotential = Superpotential::linear(1.0);

    void validate() const {
        if (!(mass >= 0.0) || !std::isfinite(mass)) throw ConfigError("mass must be finite and >= 0");
        if (!std::isfinite(kappa)) throw ConfigError("kappa must be finite");
    }
};

/// Uniform interior lattice x_i = -L + i h, i = 1..N, h = 2L/(N+1), with
/// Dirichlet walls at +-L.
class Grid {
public:
    Grid(double half_width, std::size_t count) : half_width_(half_width), count_(count) {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw ConfigError("grid half-width must be positive");
        if (count < 2) throw ConfigError("grid needs at least 2 interior points");
        spacing_ = 2.0 * half_width / static_cast<double>(count + 1);
    }

    double half_width() const { return half_width_; }
    std::size_t size() const { return count_; }
    double spacing() const { return spacing_; }

    /// i is zero-based here: x(0) = -L + h.
    double x(std::size_t i) const { return -half_width_ + static_cast<double>(i + 1) * spacing_; }

    std::vector<double> points() const {
        std::vector<double> xs(count_);
        for (std::size_t i = 0; i < count_; ++i) xs[i] = x(i);
        return xs;
    }

    /// Same box with the spacing halved (N -> 2N+1).
    Grid refined() const { return Grid(half_width_, 2 * count_ + 1); }
    /// Box doubled at fixed spacing (L -> 2L, N -> 2N+1).
    Grid doubled() const { return Grid(2.0 * half_width_, 2 * count_ + 1); }

private:
    double half_width_;
    std::size_t count_;
    double spacing_ = 0.0;
};

inline Grid build_grid(double half_width, std::size_t count, Family family) {
    if (!(half_width > 0.0)) throw ConfigError("grid half-width must be positive");
    if (count < 2) throw ConfigError("grid needs at least 2 interior points");
    // The tangent domain is fixed; its walls sit at +-pi/2 and the interior
    // points are one spacing inside them.
    if (family == Family::Tangent) half_width = std::min(half_width, std::numbers::pi / 2);
    return Grid(half_width, count);
}

enum class Route { Analytic, Dirac, Susy };
enum class Branch { Plus, Minus };

inline const char* to_string(Route r) {
    switch (r) {
    case Route::Analytic: return "analytic";
    case Route::Dirac: return "dirac";
    case Route::Susy: return "susy";
    }
    return "?";
}

inline const char* to_string(Branch b) { return b == Branch::Plus ? "+" : "-"; }
inline double sign_of(Branch b) { return b == Branch::Plus ? 1.0 : -1.0; }

/// n_sigma = n + (1 + sigma)/2.
constexpr int n_sigma_of(int n, int sigma) { return n + (1 + sigma) / 2; }

struct SpectrumRecord {
    Route route = Route::Analytic;
    Branch branch = Branch::Plus;
    int sigma = -1;
    int n = 0;
    int n_sigma = 0;
    double energy = 0.0;
    std::optional<double> epsilon;  // E^2/(1-kappa^2) - m^2, only when |kappa| < 1
    bool converged = false;
    double err_est = 0.0;
};

/// Two-component spinor sampled on the grid, normalised so that
/// h * sum(|upper|^2 + |lower|^2) = 1.
struct SpinorState {
    double energy = 0.0;
    std::vector<std::complex<double>> upper;
    std::vector<std::complex<double>> lower;
    double norm = 0.0;
    double participation_ratio = 0.0;
    double rms_width = 0.0;
};

}  // namespace dirosc
