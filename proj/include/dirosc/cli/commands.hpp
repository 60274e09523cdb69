#pragma once

// Subcommand drivers. Each returns a process exit code; tables go to `out`,
// diagnostics to `err`.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "dirosc/analytic.hpp"
#include "dirosc/cli/run_config.hpp"
#include "dirosc/dirac_solver.hpp"
#include "dirosc/errors.hpp"
#include "dirosc/model.hpp"
#include "dirosc/susy_reduction.hpp"

namespace dirosc::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitVerifyFailed = 1,
    kExitConfig = 2,
    kExitCriticalField = 3,
    kExitConvergence = 4,
    kExitLevelNotFound = 5,
};

using Json = nlohmann::ordered_json;

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

inline Grid grid_for(const PhysicalParams& params, const RunConfig& cfg) {
    const auto& sp = params.superpotential;
    if (sp.family() == Family::Tabulated) {
        auto [lo, hi] = sp.domain();
        double half = std::min({cfg.box_half_width, -lo, hi});
        if (!(half > 0.0)) throw ConfigError("tabulated domain does not contain the origin");
        return build_grid(half, cfg.grid_n, sp.family());
    }
    return build_grid(cfg.box_half_width, cfg.grid_n, sp.family());
}

inline BoxConvergenceOptions box_options(const RunConfig& cfg) {
    BoxConvergenceOptions o;
    o.tolerance = cfg.tolerance;
    o.half_width = cfg.box_half_width;
    o.points = cfg.grid_n;
    return o;
}

inline bool certified(const PhysicalParams& p) { return p.superpotential.family() != Family::Tabulated; }

/// Analytic |E| estimate for (sigma, n), or 0 when none exists.
inline double analytic_guess(const PhysicalParams& p, int sigma, int n) {
    if (!certified(p) || !(std::abs(p.kappa) < 1.0)) return 0.0;
    try {
        return analytic_level(p, LevelIndex(n, sigma)).plus;
    } catch (const Error&) {
        return 0.0;
    }
}

inline void sort_records(std::vector<SpectrumRecord>& r) {
    std::stable_sort(r.begin(), r.end(), [](const SpectrumRecord& a, const SpectrumRecord& b) {
        if (std::abs(a.energy) != std::abs(b.energy)) return std::abs(a.energy) < std::abs(b.energy);
        if (a.sigma != b.sigma) return a.sigma < b.sigma;
        return a.branch == Branch::Plus && b.branch == Branch::Minus;
    });
}

/// Both branches of every (sigma, n) with n_sigma < levels.
inline std::vector<SpectrumRecord> susy_records(const PhysicalParams& p, int levels, const Grid& grid) {
    std::vector<SpectrumRecord> out;
    for (int sigma : {-1, +1})
        for (int ns = (1 + sigma) / 2; ns < levels; ++ns) {
            int n = ns - (1 + sigma) / 2;
            auto pair = solve_nonlinear_level(p, sigma, n, grid, analytic_guess(p, sigma, n));
            out.push_back(pair.plus);
            out.push_back(pair.minus);
        }
    sort_records(out);
    return out;
}

using LevelKey = std::tuple<Branch, int, int>;  // branch, sigma, n

inline LevelKey key_of(const SpectrumRecord& r) { return {r.branch, r.sigma, r.n}; }

inline double relative_gap(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// ---------------------------------------------------------------- output

struct Row {
    SpectrumRecord record;
    std::optional<double> xcheck;
};

inline void write_spectrum_csv(std::ostream& out, const std::vector<Row>& rows, bool with_xcheck) {
    out << "route,branch,sigma,n,n_sigma,E,epsilon,converged,err_est";
    if (with_xcheck) out << ",xcheck";
    out << '\n';
    for (const auto& row : rows) {
        const auto& r = row.record;
        out << to_string(r.route) << ',' << to_string(r.branch) << ',' << (r.sigma > 0 ? "+1" : "-1") << ',' << r.n
            << ',' << r.n_sigma << ',' << fmt(r.energy) << ',' << (r.epsilon ? fmt(*r.epsilon) : "") << ','
            << (r.converged ? "true" : "false") << ',' << fmt(r.err_est);
        if (with_xcheck) out << ',' << (row.xcheck ? fmt(*row.xcheck) : "");
        out << '\n';
    }
}

inline void write_spectrum_json(std::ostream& out, const std::vector<Row>& rows, bool with_xcheck) {
    Json arr = Json::array();
    for (const auto& row : rows) {
        const auto& r = row.record;
        Json o;
        o["route"] = to_string(r.route);
        o["branch"] = to_string(r.branch);
        o["sigma"] = r.sigma;
        o["n"] = r.n;
        o["n_sigma"] = r.n_sigma;
        o["E"] = r.energy;
        o["epsilon"] = r.epsilon ? Json(*r.epsilon) : Json(nullptr);
        o["converged"] = r.converged;
        o["err_est"] = r.err_est;
        if (with_xcheck) o["xcheck"] = row.xcheck ? Json(*row.xcheck) : Json(nullptr);
        arr.push_back(std::move(o));
    }
    out << arr.dump(2) << '\n';
}

// ---------------------------------------------------------------- spectrum

/// Requires output streams already resolved by the caller.
inline int cmd_spectrum(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        const PhysicalParams params = cfg.physical_params();
        const bool want_analytic = cfg.route == RouteChoice::Analytic || cfg.route == RouteChoice::All;
        const bool want_dirac = cfg.route == RouteChoice::Dirac || cfg.route == RouteChoice::All;
        const bool want_susy = cfg.route == RouteChoice::Susy || cfg.route == RouteChoice::All;
        if ((want_analytic || want_susy) && !(std::abs(cfg.kappa) < 1.0)) {
            err << "error: critical field |kappa| = " << fmt(std::abs(cfg.kappa))
                << " >= 1: no bound states, the analytic and susy routes do not apply\n";
            return kExitCriticalField;
        }
        if (want_analytic && !certified(params)) {
            err << "error: the analytic route needs the linear or tan family\n";
            return kExitConfig;
        }

        std::vector<std::vector<SpectrumRecord>> routes;
        int code = kExitOk;
        if (want_analytic) routes.push_back(full_spectrum(params, cfg.levels - 1));
        if (want_dirac) {
            auto box = converge_box(params, static_cast<std::size_t>(cfg.levels), box_options(cfg));
            std::vector<SpectrumRecord> recs;
            for (const auto& r : box.records)
                if (r.n_sigma < cfg.levels) recs.push_back(r);
            sort_records(recs);
            const bool all_converged =
                std::all_of(recs.begin(), recs.end(), [](const SpectrumRecord& r) { return r.converged; });
            if (std::abs(cfg.kappa) < 1.0 && !all_converged) {
                err << "error: dirac route: not every level converged under box refinement\n";
                code = kExitConvergence;
            }
            routes.push_back(std::move(recs));
        }
        if (want_susy) routes.push_back(susy_records(params, cfg.levels, grid_for(params, cfg)));

        const bool with_xcheck = cfg.route == RouteChoice::All;
        std::map<LevelKey, std::vector<double>> by_key;
        if (with_xcheck)
            for (const auto& rs : routes)
                for (const auto& r : rs) by_key[key_of(r)].push_back(r.energy);

        std::vector<Row> rows;
        for (const auto& rs : routes)
            for (const auto& r : rs) {
                Row row{r, std::nullopt};
                if (with_xcheck) {
                    const auto& es = by_key[key_of(r)];
                    if (es.size() > 1) {
                        double worst = 0.0;
                        for (double a : es)
                            for (double b : es) worst = std::max(worst, relative_gap(a, b));
                        row.xcheck = worst;
                    }
                }
                rows.push_back(row);
            }
        if (cfg.format == OutputFormat::Csv) write_spectrum_csv(out, rows, with_xcheck);
        else write_spectrum_json(out, rows, with_xcheck);
        return code;
    } catch (const CriticalFieldError& e) {
        err << "error: " << e.what() << '\n';
        return kExitCriticalField;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConvergence;
    }
}

// ---------------------------------------------------------------- sweep

struct SweepRow {
    double kappa = 0.0;
    Branch branch = Branch::Plus;
    int n_sigma = 0;
    double energy = 0.0;
    bool converged = false;
    double participation_ratio = 0.0;
    std::optional<double> analytic;
    std::string status;  // bound, unbound or error: ...
};

inline std::vector<SweepRow> sweep_point(const RunConfig& cfg, double kappa) {
    RunConfig c = cfg;
    c.kappa = kappa;
    const PhysicalParams params = c.physical_params();
    auto box = converge_box(params, static_cast<std::size_t>(c.levels), box_options(c));
    std::vector<SweepRow> rows;
    for (const auto& lv : box.levels) {
        if (lv.n_sigma >= c.levels) continue;
        SweepRow r;
        r.kappa = kappa;
        r.branch = lv.branch;
        r.n_sigma = lv.n_sigma;
        r.energy = lv.energy;
        r.converged = lv.converged;
        r.participation_ratio = lv.participation_ratio;
        r.status = lv.converged ? "bound" : "unbound";
        if (std::abs(kappa) < 1.0 && certified(params)) {
            try {
                auto a = analytic_level(params, LevelIndex::from_n_sigma(lv.n_sigma, -1));
                r.analytic = lv.branch == Branch::Plus ? a.plus : a.minus;
            } catch (const IndexOutOfRangeError&) {
            } catch (const NoRealEnergyError&) {
            }
        }
        rows.push_back(r);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (std::abs(a.energy) != std::abs(b.energy)) return std::abs(a.energy) < std::abs(b.energy);
        return a.branch == Branch::Plus && b.branch == Branch::Minus;
    });
    return rows;
}

inline int cmd_sweep_kappa(const RunConfig& cfg, std::vector<double> kappas, std::ostream& out, std::ostream& err) {
    if (kappas.empty()) {
        err << "error: the kappa list is empty\n";
        return kExitConfig;
    }
    for (double k : kappas)
        if (!(std::abs(k) <= 1.5)) {
            err << "error: kappa = " << fmt(k) << " outside [-1.5, 1.5]\n";
            return kExitConfig;
        }
    std::sort(kappas.begin(), kappas.end());
    kappas.erase(std::unique(kappas.begin(), kappas.end()), kappas.end());
    try {
        (void)cfg.physical_params();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::vector<std::future<std::vector<SweepRow>>> jobs;
    for (double k : kappas) jobs.push_back(std::async(std::launch::async, sweep_point, std::cref(cfg), k));

    std::vector<SweepRow> rows;
    int code = kExitOk;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        try {
            auto part = jobs[i].get();
            rows.insert(rows.end(), part.begin(), part.end());
        } catch (const std::exception& e) {
            err << "error: kappa = " << fmt(kappas[i]) << ": " << e.what() << '\n';
            SweepRow r;
            r.kappa = kappas[i];
            r.energy = std::nan("");
            r.status = std::string("error: ") + e.what();
            rows.push_back(r);
            code = kExitConvergence;
        }
    }

    if (cfg.format == OutputFormat::Csv) {
        out << "kappa,branch,n_sigma,E,converged,participation_ratio,E_analytic,status\n";
        for (const auto& r : rows) {
            std::string status = r.status;
            std::replace(status.begin(), status.end(), ',', ';');
            out << fmt(r.kappa) << ',' << to_string(r.branch) << ',' << r.n_sigma << ','
                << (std::isnan(r.energy) ? "" : fmt(r.energy)) << ',' << (r.converged ? "true" : "false") << ','
                << fmt(r.participation_ratio) << ',' << (r.analytic ? fmt(*r.analytic) : "") << ',' << status
                << '\n';
        }
    } else {
        Json arr = Json::array();
        for (const auto& r : rows) {
            Json o;
            o["kappa"] = r.kappa;
            o["branch"] = to_string(r.branch);
            o["n_sigma"] = r.n_sigma;
            o["E"] = std::isnan(r.energy) ? Json(nullptr) : Json(r.energy);
            o["converged"] = r.converged;
            o["participation_ratio"] = r.participation_ratio;
            o["E_analytic"] = r.analytic ? Json(*r.analytic) : Json(nullptr);
            o["status"] = r.status;
            arr.push_back(std::move(o));
        }
        out << arr.dump(2) << '\n';
    }
    return code;
}

// ---------------------------------------------------------------- verify

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

inline constexpr double kRouteAgreement = 1e-4;
inline constexpr double kDiracDegeneracy = 1e-5;
inline constexpr double kSymmetry = 1e-5;
inline constexpr double kPotentialIdentity = 1e-10;
inline constexpr double kQuadraticResidual = 1e-12;

inline std::vector<Check> run_checks(const RunConfig& cfg) {
    const PhysicalParams params = cfg.physical_params();
    const Grid grid = grid_for(params, cfg);
    std::vector<Check> checks;
    auto fail = [&](const std::string& name, const std::string& why) { checks.push_back({name, false, why}); };

    auto analytic = full_spectrum(params, cfg.levels - 1);

    std::optional<BoxConvergence> box;
    try {
        box = converge_box(params, static_cast<std::size_t>(cfg.levels), box_options(cfg));
        int bad = 0;
        for (const auto& lv : box->levels)
            if (lv.n_sigma < cfg.levels && !lv.converged) ++bad;
        checks.push_back({"dirac-converged", bad == 0, std::to_string(bad) + " unconverged level(s)"});
    } catch (const Error& e) {
        fail("dirac-converged", e.what());
    }

    std::optional<std::vector<SpectrumRecord>> susy;
    try {
        susy = susy_records(params, cfg.levels, grid);
    } catch (const Error& e) {
        fail("susy-solved", e.what());
    }

    if (box && susy) {
        std::map<LevelKey, double> d, s;
        for (const auto& r : box->records) d[key_of(r)] = r.energy;
        for (const auto& r : *susy) s[key_of(r)] = r.energy;
        double worst = 0.0;
        std::string where = "none";
        int missing = 0;
        for (const auto& a : analytic) {
            auto k = key_of(a);
            // The continuum negative ground level has no first-order partner
            // and is absent from the lattice when U != 0.
            bool optional_level = a.branch == Branch::Minus && a.n_sigma == 0;
            if (!d.count(k) || !s.count(k)) {
                if (!optional_level) ++missing;
                continue;
            }
            for (double g : {relative_gap(a.energy, d[k]), relative_gap(a.energy, s[k]), relative_gap(d[k], s[k])})
                if (g > worst) {
                    worst = g;
                    where = std::string(to_string(a.branch)) + " sigma=" + std::to_string(a.sigma) +
                            " n=" + std::to_string(a.n);
                }
        }
        checks.push_back({"three-route", worst <= kRouteAgreement && missing == 0,
                          "max relative gap " + fmt(worst) + " at " + where + ", " + std::to_string(missing) +
                              " missing"});
    }

    {
        std::vector<SpectrumRecord> plus;
        for (const auto& r : analytic)
            if (r.branch == Branch::Plus) plus.push_back(r);
        auto p = degenerate_pairs(plus);
        bool ok = p.unpaired.size() == 1 && p.unpaired.front().n_sigma == 0;
        checks.push_back({"degeneracy-analytic", ok,
                          std::to_string(p.pairs.size()) + " pairs, " + std::to_string(p.unpaired.size()) +
                              " unpaired"});
    }
    if (box) {
        std::vector<SpectrumRecord> plus;
        for (const auto& r : box->records)
            if (r.branch == Branch::Plus && r.n_sigma < cfg.levels) plus.push_back(r);
        auto p = degenerate_pairs(plus, kDiracDegeneracy);
        bool ok = p.unpaired.size() == 1 && p.unpaired.front().n_sigma == 0;
        checks.push_back({"degeneracy-dirac", ok,
                          std::to_string(p.pairs.size()) + " pairs, " + std::to_string(p.unpaired.size()) +
                              " unpaired"});

        double worst = 0.0;
        for (const auto& lv : box->levels) {
            if (lv.branch != Branch::Plus || lv.n_sigma < 1) continue;
            if (auto* m = box->find(Branch::Minus, lv.n_sigma))
                worst = std::max(worst, relative_gap(lv.energy, -m->energy));
        }
        checks.push_back({"pm-symmetry", worst <= kSymmetry, "max relative asymmetry " + fmt(worst)});
    }

    {
        double worst = 0.0;
        const double k2 = params.kappa * params.kappa;
        for (const auto& a : analytic) {
            auto weff = effective_superpotential(params.superpotential, params.kappa, a.energy);
            const double offset = k2 * a.energy * a.energy / (1.0 - k2);
            for (int sigma : {-1, +1})
                for (double x : grid.points()) {
                    double v12 = squared_potential(params.superpotential, params.kappa, a.energy, sigma, x);
                    double v13 = susy_potential(weff, sigma, x);
                    worst = std::max(worst, std::abs(v13 - v12 - offset) / std::max(1.0, std::abs(v12)));
                }
        }
        checks.push_back({"potential-identity", worst <= kPotentialIdentity, "max relative deviation " + fmt(worst)});
    }

    if (params.superpotential.family() == Family::Tangent) {
        double worst = 0.0;
        for (const auto& a : analytic)
            worst = std::max(worst, analytic_level(params, LevelIndex(a.n, a.sigma)).residual);
        checks.push_back({"quadratic-residual", worst <= kQuadraticResidual, "max relative residual " + fmt(worst)});
    }
    return checks;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.family == Family::Tabulated) {
        err << "error: verify needs the linear or tan family\n";
        return kExitConfig;
    }
    if (!(std::abs(cfg.kappa) < 1.0)) {
        err << "error: critical field |kappa| = " << fmt(std::abs(cfg.kappa)) << " >= 1, nothing to verify\n";
        return kExitCriticalField;
    }
    std::vector<Check> checks;
    try {
        checks = run_checks(cfg);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitVerifyFailed;
    }
    bool all = true;
    for (const auto& c : checks) {
        out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        all = all && c.pass;
    }
    return all ? kExitOk : kExitVerifyFailed;
}

// ---------------------------------------------------------------- wavefunction

struct LevelSelector {
    int sigma = -1;
    int n = 0;
    Branch branch = Branch::Plus;
};

inline int cmd_wavefunction(const RunConfig& cfg, const LevelSelector& sel, std::ostream& out, std::ostream& err) {
    if (sel.sigma != 1 && sel.sigma != -1) {
        err << "error: sigma must be +1 or -1\n";
        return kExitConfig;
    }
    if (sel.n < 0) {
        err << "error: n must be >= 0\n";
        return kExitConfig;
    }
    if (!(std::abs(cfg.kappa) < 1.0)) {
        err << "error: critical field |kappa| = " << fmt(std::abs(cfg.kappa)) << " >= 1: no bound level to show\n";
        return kExitLevelNotFound;
    }
    try {
        const PhysicalParams params = cfg.physical_params();
        const Grid grid = grid_for(params, cfg);
        const int ns = n_sigma_of(sel.n, sel.sigma);
        auto spec = dirac_spectrum(params, grid, static_cast<std::size_t>(ns) + 2);
        const SpinorState* dirac = spec.state_of(sel.branch, ns);
        if (!dirac) {
            err << "error: no lattice level with branch " << to_string(sel.branch) << " and n_sigma " << ns << '\n';
            return kExitLevelNotFound;
        }
        auto rec = solve_nonlinear_branch(params, sel.sigma, sel.n, sel.branch, grid, std::abs(dirac->energy));
        auto phi = susy_eigenfunction(params, sel.sigma, sel.n, rec.energy, grid);
        auto chi = spin_pair(spin_eigensystem(params.kappa), sel.sigma);
        auto rebuilt = reconstruct_spinor(params, rec.energy, chi, phi, grid);
        const double overlap = spinor_overlap(rebuilt.state, *dirac, grid);

        const double h = grid.spacing();
        const std::size_t n = grid.size();
        std::vector<double> dp1(n), dp2(n), sp1(n), sp2(n), dc(n), sc(n);
        double dacc = 0.0, sacc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dp1[i] = std::norm(dirac->upper[i]);
            dp2[i] = std::norm(dirac->lower[i]);
            sp1[i] = std::norm(rebuilt.state.upper[i]);
            sp2[i] = std::norm(rebuilt.state.lower[i]);
            dacc += h * (dp1[i] + dp2[i]);
            sacc += h * (sp1[i] + sp2[i]);
            dc[i] = dacc;
            sc[i] = sacc;
        }
        if (cfg.format == OutputFormat::Csv) {
            out << "# E_dirac=" << fmt(dirac->energy) << " E_susy=" << fmt(rec.energy) << " overlap=" << fmt(overlap)
                << " residual=" << fmt(rebuilt.residual) << '\n';
            out << "x,dirac_p1,dirac_p2,dirac_cumulative,susy_p1,susy_p2,susy_cumulative\n";
            for (std::size_t i = 0; i < n; ++i)
                out << fmt(grid.x(i)) << ',' << fmt(dp1[i]) << ',' << fmt(dp2[i]) << ',' << fmt(dc[i]) << ','
                    << fmt(sp1[i]) << ',' << fmt(sp2[i]) << ',' << fmt(sc[i]) << '\n';
        } else {
            Json o;
            o["E_dirac"] = dirac->energy;
            o["E_susy"] = rec.energy;
            o["overlap"] = overlap;
            o["residual"] = rebuilt.residual;
            o["x"] = grid.points();
            o["dirac_p1"] = dp1;
            o["dirac_p2"] = dp2;
            o["dirac_cumulative"] = dc;
            o["susy_p1"] = sp1;
            o["susy_p2"] = sp2;
            o["susy_cumulative"] = sc;
            out << o.dump() << '\n';
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const BracketError& e) {
        err << "error: " << e.what() << '\n';
        return kExitLevelNotFound;
    } catch (const DegenerateStateError& e) {
        err << "error: " << e.what() << "; try the other sigma sector\n";
        return kExitLevelNotFound;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConvergence;
    }
}

}  // namespace dirosc::cli
