#pragma once

// Direct lattice route: the first-order operator
//
//     H = sigma_x p - sigma_y W + m sigma_z + U
//
// becomes real symmetric after multiplying the lower component by i
// (c = i b):  [[m+U, W-d/dx], [W+d/dx, -m+U]].  d/dx is a forward difference
// in the upper-right block and (its transpose) a backward difference in the
// lower-left one; this one-sided split keeps the doublers out at the price of
// O(h) accuracy, which Richardson extrapolation recovers.
//
// Storage order is interleaved, (c_1, a_1, c_2, a_2, ...), where the matrix
// is exactly tridiagonal.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirosc/errors.hpp"
#include "dirosc/linalg.hpp"
#include "dirosc/model.hpp"

namespace dirosc {

inline constexpr std::size_t kMinSolverPoints = 8;

class DiracMatrix {
public:
    DiracMatrix(linalg::SymmetricBanded band, Grid grid, PhysicalParams params)
        : band_(std::move(band)), grid_(std::move(grid)), params_(std::move(params)) {}

    const linalg::SymmetricBanded& banded() const { return band_; }
    const Grid& grid() const { return grid_; }
    const PhysicalParams& params() const { return params_; }
    std::size_t dimension() const { return band_.size(); }

    static std::size_t upper_index(std::size_t site) { return 2 * site + 1; }
    static std::size_t lower_index(std::size_t site) { return 2 * site; }

    linalg::Tridiagonal tridiagonal() const { return linalg::tridiagonalize(band_).t; }

    /// The same operator in block order (a_1..a_N, c_1..c_N).
    linalg::DenseMatrix block_form() const {
        const std::size_t n = grid_.size();
        linalg::DenseMatrix out(2 * n, 2 * n);
        auto block_of = [n](std::size_t k) { return (k % 2 == 1) ? k / 2 : n + k / 2; };
        for (std::size_t i = 0; i < 2 * n; ++i)
            for (std::size_t j = 0; j < 2 * n; ++j) {
                double v = band_(i, j);
                if (v != 0.0) out(block_of(i), block_of(j)) = v;
            }
        return out;
    }

private:
    linalg::SymmetricBanded band_;
    Grid grid_;
    PhysicalParams params_;
};

inline void check_grid_in_domain(const Superpotential& sp, const Grid& grid) {
    if (!sp.contains(grid.x(0)) || !sp.contains(grid.x(grid.size() - 1)))
        throw DomainError("grid [" + std::to_string(grid.x(0)) + ", " +
                          std::to_string(grid.x(grid.size() - 1)) + "] leaves the " +
                          to_string(sp.family()) + " superpotential domain");
}

inline DiracMatrix assemble_dirac_matrix(const PhysicalParams& params, const Grid& grid) {
    params.validate();
    check_grid_in_domain(params.superpotential, grid);
    const std::size_t n = grid.size();
    const double inv_h = 1.0 / grid.spacing();
    const double m = params.mass;
    linalg::SymmetricBanded band(2 * n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = params.superpotential(grid.x(i)).w;
        const double u = params.kappa * w;
        const std::size_t c = DiracMatrix::lower_index(i);
        const std::size_t a = DiracMatrix::upper_index(i);
        band.set(c, c, -m + u);
        band.set(a, a, m + u);
        band.set(a, c, w + inv_h);                    // B_ii = W_i + 1/h
        if (i + 1 < n) band.set(a, c + 2, -inv_h);  // B_i,i+1 = -1/h
    }
    return DiracMatrix(std::move(band), grid, params);
}

struct LocalizationMetrics {
    double participation_ratio;  // length units
    double rms_width;            // about the probability centroid
};

inline LocalizationMetrics localization_metrics(const SpinorState& state, const Grid& grid) {
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    std::vector<double> p(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = h * (std::norm(state.upper[i]) + std::norm(state.lower[i]));
        total += p[i];
    }
    double sum_sq = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] /= total;
        sum_sq += p[i] * p[i];
        mean += p[i] * grid.x(i);
    }
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += p[i] * (grid.x(i) - mean) * (grid.x(i) - mean);
    return {h / sum_sq, std::sqrt(var)};
}

/// One lattice eigenvalue. Labels: positive branch by ascending E; the
/// negative branch by ascending |E|, starting at n_sigma = 0 only when its
/// lowest |E| coincides with the positive ground level.
struct LatticeLevel {
    Branch branch = Branch::Plus;
    int n_sigma = 0;
    double energy = 0.0;
    bool converged = false;
    double err_est = 0.0;
    double participation_ratio = 0.0;
    double rms_width = 0.0;
    double residual = 0.0;         // ||(T - E) v||, unit v
    double pr_growth = 0.0;        // PR ratio between the last two refinement rounds (0: not measured)
};

/// Expands lattice levels into labelled records: a level with n_sigma = k >= 1
/// carries both SUSY labels (sigma=-1, n=k) and (sigma=+1, n=k-1), since the
/// two generate the same Dirac eigenstate.
inline std::vector<SpectrumRecord> lattice_records(std::span<const LatticeLevel> levels,
                                                   const PhysicalParams& params) {
    std::vector<SpectrumRecord> out;
    const double k2 = params.kappa * params.kappa;
    for (const auto& lv : levels) {
        SpectrumRecord r;
        r.route = Route::Dirac;
        r.branch = lv.branch;
        r.energy = lv.energy;
        r.converged = lv.converged;
        r.err_est = lv.err_est;
        if (k2 < 1.0) r.epsilon = lv.energy * lv.energy / (1.0 - k2) - params.mass * params.mass;
        r.sigma = -1;
        r.n = lv.n_sigma;
        r.n_sigma = lv.n_sigma;
        out.push_back(r);
        if (lv.n_sigma >= 1) {
            r.sigma = +1;
            r.n = lv.n_sigma - 1;
            out.push_back(r);
        }
    }
    return out;
}

struct DiracSpectrum {
    std::vector<LatticeLevel> levels;  // positive branch first, then negative
    std::vector<SpinorState> states;   // parallel to levels (empty without vectors)
    double matrix_norm = 0.0;

    std::vector<SpectrumRecord> records(const PhysicalParams& params) const {
        return lattice_records(levels, params);
    }

    const LatticeLevel* find(Branch b, int n_sigma) const {
        for (const auto& lv : levels)
            if (lv.branch == b && lv.n_sigma == n_sigma) return &lv;
        return nullptr;
    }
    const SpinorState* state_of(Branch b, int n_sigma) const {
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (levels[i].branch == b && levels[i].n_sigma == n_sigma && i < states.size()) return &states[i];
        return nullptr;
    }
};

namespace detail {

inline bool same_level(double a, double b) {
    return std::abs(a - b) <= 1e-3 * std::max(std::abs(a), std::abs(b)) + 1e-9;
}

// Eigenvalues closest to zero on each side of the spectrum.
struct BranchValues {
    std::vector<double> positive;  // ascending
    std::vector<double> negative;  // ascending |E|
};

inline BranchValues branch_values(const linalg::Tridiagonal& t, std::size_t count) {
    const std::size_t dim = t.size();
    const std::size_t below = linalg::sturm_count(t, 0.0);
    BranchValues out;
    if (below < dim) {
        std::size_t hi = std::min(dim, below + count);
        out.positive = linalg::eigen_bisect(t, below + 1, hi);
    }
    if (below > 0) {
        std::size_t lo = below > count ? below - count + 1 : 1;
        out.negative = linalg::eigen_bisect(t, lo, below);
        std::reverse(out.negative.begin(), out.negative.end());
    }
    return out;
}

inline int negative_offset(const BranchValues& v) {
    if (v.positive.empty() || v.negative.empty()) return 0;
    return same_level(-v.negative.front(), v.positive.front()) ? 0 : 1;
}

}  // namespace detail

/// The `count` smallest-|E| lattice eigenvalues of each sign, with
/// normalised, gauge-restored spinors when `with_vectors` is set.
inline DiracSpectrum dirac_spectrum(const PhysicalParams& params, const Grid& grid, std::size_t count,
                                    bool with_vectors = true) {
    if (count < 1) throw ConfigError("dirac_spectrum: count must be >= 1");
    if (grid.size() < kMinSolverPoints)
        throw ConfigError("dirac_spectrum: grid needs at least " + std::to_string(kMinSolverPoints) + " points");
    const DiracMatrix matrix = assemble_dirac_matrix(params, grid);
    const linalg::Tridiagonal t = matrix.tridiagonal();
    const auto values = detail::branch_values(t, count);
    const int offset = detail::negative_offset(values);

    DiracSpectrum out;
    out.matrix_norm = t.norm();
    for (std::size_t k = 0; k < values.positive.size(); ++k)
        out.levels.push_back({Branch::Plus, static_cast<int>(k), values.positive[k]});
    for (std::size_t k = 0; k < values.negative.size(); ++k)
        out.levels.push_back({Branch::Minus, static_cast<int>(k) + offset, values.negative[k]});

    if (!with_vectors) return out;

    const std::size_t n = grid.size();
    const double inv_sqrt_h = 1.0 / std::sqrt(grid.spacing());
    std::vector<std::vector<double>> vectors;
    std::vector<double> found;
    for (auto& lv : out.levels) {
        std::vector<std::vector<double>> close;
        for (std::size_t j = 0; j < found.size(); ++j)
            if (std::abs(found[j] - lv.energy) <= 1e-8 * out.matrix_norm) close.push_back(vectors[j]);
        auto v = linalg::inverse_iteration(t, lv.energy, close);
        auto tv = t.apply(v);
        double res = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) res += (tv[i] - lv.energy * v[i]) * (tv[i] - lv.energy * v[i]);
        lv.residual = std::sqrt(res);

        SpinorState s;
        s.energy = lv.energy;
        s.upper.resize(n);
        s.lower.resize(n);
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double a = v[DiracMatrix::upper_index(i)];
            double c = v[DiracMatrix::lower_index(i)];
            s.upper[i] = {a * inv_sqrt_h, 0.0};
            s.lower[i] = {0.0, -c * inv_sqrt_h};  // b = -i c
            norm += a * a + c * c;
        }
        s.norm = norm;
        auto metrics = localization_metrics(s, grid);
        s.participation_ratio = lv.participation_ratio = metrics.participation_ratio;
        s.rms_width = lv.rms_width = metrics.rms_width;
        out.states.push_back(std::move(s));
        vectors.push_back(std::move(v));
        found.push_back(lv.energy);
    }
    return out;
}

struct ExtrapolatedLevel {
    Branch branch;
    int n_sigma;
    double energy;
    double err_est;  // distance to the next-lower-order extrapolant
};

/// Richardson extrapolation of the lattice levels over `levels` grids
/// (h, h/2, h/4), eliminating the O(h) and then the O(h^2) error terms.
/// levels = 1 returns the raw values.
inline std::vector<ExtrapolatedLevel> richardson_levels(const PhysicalParams& params, const Grid& grid,
                                                        std::size_t count, int levels) {
    if (levels < 1 || levels > 3) throw ConfigError("richardson levels must be 1, 2 or 3");
    std::vector<detail::BranchValues> runs;
    Grid g = grid;
    for (int r = 0; r < levels; ++r) {
        const DiracMatrix matrix = assemble_dirac_matrix(params, g);
        runs.push_back(detail::branch_values(matrix.tridiagonal(), count));
        g = g.refined();
    }
    const int offset = detail::negative_offset(runs.front());

    auto extrapolate = [&](auto pick) {
        std::vector<std::pair<double, double>> out;  // value, error
        std::size_t len = pick(runs[0]).size();
        for (const auto& r : runs) len = std::min(len, pick(r).size());
        for (std::size_t k = 0; k < len; ++k) {
            if (levels == 1) {
                out.emplace_back(pick(runs[0])[k], 0.0);
            } else if (levels == 2) {
                double e1 = pick(runs[0])[k], e2 = pick(runs[1])[k];
                double r1 = 2.0 * e2 - e1;
                out.emplace_back(r1, std::abs(r1 - e2));
            } else {
                double e1 = pick(runs[0])[k], e2 = pick(runs[1])[k], e4 = pick(runs[2])[k];
                double r1 = 2.0 * e2 - e1;
                double r1b = 2.0 * e4 - e2;
                double r2 = (4.0 * r1b - r1) / 3.0;
                out.emplace_back(r2, std::abs(r2 - r1b));
            }
        }
        return out;
    };

    std::vector<ExtrapolatedLevel> out;
    auto pos = extrapolate([](const detail::BranchValues& v) -> const std::vector<double>& { return v.positive; });
    auto neg = extrapolate([](const detail::BranchValues& v) -> const std::vector<double>& { return v.negative; });
    for (std::size_t k = 0; k < pos.size(); ++k)
        out.push_back({Branch::Plus, static_cast<int>(k), pos[k].first, pos[k].second});
    for (std::size_t k = 0; k < neg.size(); ++k)
        out.push_back({Branch::Minus, static_cast<int>(k) + offset, neg[k].first, neg[k].second});
    return out;
}

struct BoxConvergenceOptions {
    double tolerance = 1e-6;           // relative level movement between rounds
    int max_doublings = 6;
    std::size_t dimension_cap = 65536;  // largest 2N allowed
    int richardson = 3;                // grids used for extrapolation (1 = off)
    double half_width = 20.0;
    std::size_t points = 4000;
};

struct BoxConvergence {
    std::vector<LatticeLevel> levels;
    std::vector<SpectrumRecord> records;
    int rounds = 0;          // refinement rounds performed after the first
    bool hit_cap = false;    // stopped early because the next round exceeded the cap
    Grid final_grid{1.0, 2};

    const LatticeLevel* find(Branch b, int n_sigma) const {
        for (const auto& lv : levels)
            if (lv.branch == b && lv.n_sigma == n_sigma) return &lv;
        return nullptr;
    }
    bool all_converged() const {
        return std::all_of(levels.begin(), levels.end(), [](const LatticeLevel& l) { return l.converged; });
    }
    bool none_converged() const {
        return std::none_of(levels.begin(), levels.end(), [](const LatticeLevel& l) { return l.converged; });
    }
};

namespace detail {

inline bool moved_less_than(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1.0});
}

inline std::size_t richardson_dimension(std::size_t n, int levels) {
    for (int r = 1; r < levels; ++r) n = 2 * n + 1;
    return 2 * n;
}

// Index levels by (branch, position within branch) for round-to-round matching.
inline std::vector<LatticeLevel>::const_iterator match(const std::vector<LatticeLevel>& levels,
                                                       Branch b, std::size_t position) {
    std::size_t seen = 0;
    for (auto it = levels.begin(); it != levels.end(); ++it) {
        if (it->branch != b) continue;
        if (seen++ == position) return it;
    }
    return levels.end();
}

inline std::size_t position_in_branch(const std::vector<LatticeLevel>& levels, std::size_t index) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < index; ++i)
        if (levels[i].branch == levels[index].branch) ++pos;
    return pos;
}

}  // namespace detail

/// Classifies each of the `count` lowest-|E| levels per sign as bound
/// (converged under refinement) or unbound.
///
/// Linear family: the box is doubled at fixed spacing until every level moves
/// by less than the tolerance; converged levels are then Richardson
/// extrapolated in the box where they settled. Tangent and tabulated domains
/// are fixed, so only N is refined and the extrapolated values are compared.
inline BoxConvergence converge_box(const PhysicalParams& params, std::size_t count,
                                   const BoxConvergenceOptions& opt = {}) {
    params.validate();
    const Family family = params.superpotential.family();
    const bool refine_box = family == Family::Linear;
    Grid grid = [&] {
        if (family == Family::Tabulated) {
            auto [lo, hi] = params.superpotential.domain();
            double half = std::min({opt.half_width, -lo, hi});
            if (!(half > 0.0)) throw DomainError("tabulated domain does not contain the origin");
            return build_grid(half, opt.points, family);
        }
        return build_grid(opt.half_width, opt.points, family);
    }();

    const std::size_t first_dim = refine_box ? 2 * grid.size() : detail::richardson_dimension(grid.size(), opt.richardson);
    if (first_dim > opt.dimension_cap)
        throw ResourceError("lattice dimension " + std::to_string(first_dim) + " exceeds the cap " +
                            std::to_string(opt.dimension_cap));

    BoxConvergence out;

    if (refine_box) {
        DiracSpectrum prev = dirac_spectrum(params, grid, count, true);
        std::vector<LatticeLevel> levels = prev.levels;
        std::vector<double> last_delta(levels.size(), 0.0);
        std::vector<Grid> settled(levels.size(), grid);
        Grid prev_grid = grid;
        for (int r = 1; r <= opt.max_doublings; ++r) {
            Grid next = prev_grid.doubled();
            if (2 * next.size() > opt.dimension_cap) {
                out.hit_cap = true;
                break;
            }
            DiracSpectrum cur = dirac_spectrum(params, next, count, true);
            ++out.rounds;
            bool all = true;
            for (std::size_t i = 0; i < levels.size(); ++i) {
                if (levels[i].converged) continue;
                auto pos = detail::position_in_branch(levels, i);
                auto a = detail::match(prev.levels, levels[i].branch, pos);
                auto b = detail::match(cur.levels, levels[i].branch, pos);
                if (a == prev.levels.end() || b == cur.levels.end()) {
                    all = false;
                    continue;
                }
                last_delta[i] = std::abs(b->energy - a->energy);
                levels[i].energy = b->energy;
                levels[i].participation_ratio = b->participation_ratio;
                levels[i].rms_width = b->rms_width;
                levels[i].residual = b->residual;
                if (a->participation_ratio > 0.0)
                    levels[i].pr_growth = b->participation_ratio / a->participation_ratio;
                if (detail::moved_less_than(a->energy, b->energy, opt.tolerance)) {
                    levels[i].converged = true;
                    settled[i] = prev_grid;
                    levels[i].energy = a->energy;
                    levels[i].participation_ratio = a->participation_ratio;
                    levels[i].rms_width = a->rms_width;
                    levels[i].residual = a->residual;
                } else {
                    all = false;
                }
            }
            prev = std::move(cur);
            prev_grid = next;
            if (all) break;
        }

        // Extrapolate converged levels in the box where they settled.
        std::vector<std::pair<double, std::vector<ExtrapolatedLevel>>> cache;
        for (std::size_t i = 0; i < levels.size(); ++i) {
            levels[i].err_est = last_delta[i];
            if (!levels[i].converged || opt.richardson <= 1) continue;
            const Grid& g = settled[i];
            int rl = opt.richardson;
            while (rl > 1 && detail::richardson_dimension(g.size(), rl) > opt.dimension_cap) --rl;
            if (rl <= 1) continue;
            auto it = std::find_if(cache.begin(), cache.end(), [&](auto& c) { return c.first == g.half_width(); });
            if (it == cache.end()) {
                cache.emplace_back(g.half_width(), richardson_levels(params, g, count, rl));
                it = std::prev(cache.end());
            }
            for (const auto& ex : it->second)
                if (ex.branch == levels[i].branch && ex.n_sigma == levels[i].n_sigma) {
                    levels[i].energy = ex.energy;
                    levels[i].err_est = std::max(last_delta[i], ex.err_est);
                }
        }
        out.levels = std::move(levels);
        out.final_grid = prev_grid;
    } else {
        // Fixed domain: compare extrapolated spectra under N -> 2N+1.
        auto base = dirac_spectrum(params, grid, count, true);
        std::vector<LatticeLevel> levels = base.levels;
        auto prev_values = richardson_levels(params, grid, count, opt.richardson);
        auto prev_raw = std::move(base);
        std::vector<double> last_delta(levels.size(), 0.0);
        for (std::size_t i = 0; i < levels.size(); ++i) {
            auto pos = detail::position_in_branch(levels, i);
            std::size_t seen = 0;
            for (const auto& ex : prev_values)
                if (ex.branch == levels[i].branch && seen++ == pos) {
                    levels[i].energy = ex.energy;
                    levels[i].err_est = ex.err_est;
                }
        }
        Grid prev_grid = grid;
        for (int r = 1; r <= opt.max_doublings; ++r) {
            Grid next = prev_grid.refined();
            if (detail::richardson_dimension(next.size(), opt.richardson) > opt.dimension_cap) {
                out.hit_cap = true;
                break;
            }
            auto cur_values = richardson_levels(params, next, count, opt.richardson);
            auto cur_raw = dirac_spectrum(params, next, count, true);
            ++out.rounds;
            bool all = true;
            for (std::size_t i = 0; i < levels.size(); ++i) {
                if (levels[i].converged) continue;
                auto pos = detail::position_in_branch(levels, i);
                const ExtrapolatedLevel* a = nullptr;
                const ExtrapolatedLevel* b = nullptr;
                std::size_t sa = 0, sb = 0;
                for (const auto& ex : prev_values)
                    if (ex.branch == levels[i].branch && sa++ == pos) a = &ex;
                for (const auto& ex : cur_values)
                    if (ex.branch == levels[i].branch && sb++ == pos) b = &ex;
                auto ra = detail::match(prev_raw.levels, levels[i].branch, pos);
                auto rb = detail::match(cur_raw.levels, levels[i].branch, pos);
                if (ra != prev_raw.levels.end() && rb != cur_raw.levels.end() && ra->participation_ratio > 0.0)
                    levels[i].pr_growth = rb->participation_ratio / ra->participation_ratio;
                if (!a || !b) {
                    all = false;
                    continue;
                }
                last_delta[i] = std::abs(b->energy - a->energy);
                levels[i].energy = b->energy;
                levels[i].err_est = std::max(last_delta[i], b->err_est);
                if (rb != cur_raw.levels.end()) {
                    levels[i].participation_ratio = rb->participation_ratio;
                    levels[i].rms_width = rb->rms_width;
                    levels[i].residual = rb->residual;
                }
                if (detail::moved_less_than(a->energy, b->energy, opt.tolerance))
                    levels[i].converged = true;
                else
                    all = false;
            }
            prev_values = std::move(cur_values);
            prev_raw = std::move(cur_raw);
            prev_grid = next;
            if (all) break;
        }
        out.levels = std::move(levels);
        out.final_grid = prev_grid;
    }

    out.records = lattice_records(out.levels, params);
    return out;
}

}  // namespace dirosc
