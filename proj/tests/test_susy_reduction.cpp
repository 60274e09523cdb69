#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "dirosc/dirac_solver.hpp"
#include "dirosc/errors.hpp"
#include "dirosc/linalg.hpp"
#include "dirosc/susy_reduction.hpp"
#include "oracles.hpp"

using namespace dirosc;
using C = std::complex<double>;

namespace {

PhysicalParams linear_params(double kappa) {
    PhysicalParams p;
    p.kappa = kappa;
    p.superpotential = Superpotential::linear(1.0);
    return p;
}

PhysicalParams tan_params(double kappa, double alpha0 = 5.0) {
    PhysicalParams p;
    p.kappa = kappa;
    p.superpotential = Superpotential::tangent(alpha0);
    return p;
}

const Grid kLinearGrid = build_grid(20.0, 4000, Family::Linear);
const Grid kTanGrid = build_grid(std::numbers::pi / 2.0, 4000, Family::Tangent);

// Lowest k eigenvalues of the 3-point operator, extrapolated over (h, h/2).
std::vector<double> extrapolated_levels(const EffectiveSuperpotential& w, int sigma, const Grid& g, std::size_t k) {
    auto a = linalg::eigen_bisect(schrodinger_operator(w, sigma, g), 1, k);
    auto b = linalg::eigen_bisect(schrodinger_operator(w, sigma, g.refined()), 1, k);
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = (4.0 * b[i] - a[i]) / 3.0;
    return out;
}

bool equal_up_to_phase(const std::array<C, 2>& a, const std::array<C, 2>& b, double tol) {
    C dot = std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1];
    return std::abs(std::abs(dot) - 1.0) <= tol;
}

}  // namespace

TEST(SpinEigensystem, ZeroField) {
    auto s = spin_eigensystem(0.0);
    EXPECT_EQ(s[0].sigma, +1);
    EXPECT_EQ(s[0].lambda, 1.0);
    EXPECT_EQ(s[0].chi[0], C(0.0));
    EXPECT_EQ(s[0].chi[1], C(1.0));
    EXPECT_EQ(s[1].sigma, -1);
    EXPECT_EQ(s[1].lambda, -1.0);
    EXPECT_EQ(s[1].chi[0], C(1.0));
    EXPECT_EQ(s[1].chi[1], C(0.0));
}

TEST(SpinEigensystem, KappaPointSix) {
    auto s = spin_eigensystem(0.6);
    EXPECT_NEAR(s[0].lambda, 0.8, 1e-15);
    EXPECT_NEAR(s[1].lambda, -0.8, 1e-15);
    std::array<C, 2> reference{C(0.0, 0.31622776601683794), C(0.9486832980505138)};
    EXPECT_TRUE(equal_up_to_phase(s[0].chi, reference, 1e-12));
    // First nonzero component positive real.
    EXPECT_GT(s[0].chi[0].real(), 0.0);
    EXPECT_EQ(s[0].chi[0].imag(), 0.0);
    EXPECT_NEAR(std::abs(s[0].chi[0]), 0.31622776601683794, 1e-12);
    for (const auto& p : s) EXPECT_LE(p.residual, 1e-12);
}

TEST(SpinEigensystem, ResidualAndNormAcrossKappa) {
    for (double k = -0.999; k < 1.0; k += 0.037) {
        for (const auto& p : spin_eigensystem(k)) {
            EXPECT_NEAR(p.lambda * p.lambda + k * k, 1.0, 1e-12);
            EXPECT_NEAR(std::norm(p.chi[0]) + std::norm(p.chi[1]), 1.0, 1e-12);
            // Independent residual of (-sigma_z + i k sigma_x) chi = lambda chi.
            C ik(0.0, k);
            C r0 = -p.chi[0] + ik * p.chi[1] - p.lambda * p.chi[0];
            C r1 = ik * p.chi[0] + p.chi[1] - p.lambda * p.chi[1];
            EXPECT_LE(std::abs(r0) + std::abs(r1), 1e-12);
        }
    }
}

TEST(SpinEigensystem, CriticalField) {
    EXPECT_THROW(spin_eigensystem(1.0), CriticalFieldError);
    EXPECT_THROW(spin_eigensystem(-1.0), CriticalFieldError);
    EXPECT_THROW(spin_eigensystem(1.2), CriticalFieldError);
}

TEST(EffectiveSuperpotential, ZeroFieldIsIdentity) {
    for (const auto& sp : {Superpotential::linear(1.0), Superpotential::tangent(5.0)}) {
        auto w = effective_superpotential(sp, 0.0, 3.7);
        for (double x : {-1.3, -0.2, 0.0, 0.8, 1.4}) {
            EXPECT_NEAR(w(x).w, sp(x).w, 1e-14);
            EXPECT_NEAR(w(x).wprime, sp(x).wprime, 1e-12);
        }
    }
}

TEST(EffectiveSuperpotential, LinearExample) {
    auto w = effective_superpotential(Superpotential::linear(1.0), 0.6, 1.0);
    EXPECT_NEAR(w.slope(), 0.8, 1e-15);
    EXPECT_NEAR(w.shift(), 0.9375, 1e-15);
    for (double x : {-2.0, 0.0, 1.5}) {
        EXPECT_NEAR(w(x).w, 0.8 * x + 0.75, 1e-14);
        EXPECT_NEAR(w(x).wprime, 0.8, 1e-15);
    }
}

TEST(EffectiveSuperpotential, TangentExample) {
    auto w = effective_superpotential(Superpotential::tangent(5.0), 0.5, 2.0);
    EXPECT_NEAR(w.alpha(), 4.330127018922193, 1e-12);
    EXPECT_NEAR(w.beta(), 1.1547005383792515, 1e-12);
}

TEST(EffectiveSuperpotential, FamilyFormMatchesDefinition) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uk(-0.95, 0.95), ue(-5.0, 5.0);
    for (int t = 0; t < 20; ++t) {
        double k = uk(rng), e = ue(rng);
        for (const auto& sp : {Superpotential::linear(1.3), Superpotential::tangent(5.0)}) {
            auto w = effective_superpotential(sp, k, e);
            for (double x = -1.5; x <= 1.5; x += 0.05) {
                auto a = w(x);
                auto b = w.defining(x);
                EXPECT_LE(std::abs(a.w - b.w), 1e-12 * std::max(1.0, std::abs(b.w)));
                EXPECT_LE(std::abs(a.wprime - b.wprime), 1e-12 * std::max(1.0, std::abs(b.wprime)));
            }
        }
    }
}

TEST(EffectiveSuperpotential, CriticalField) {
    EXPECT_THROW(effective_superpotential(Superpotential::linear(1.0), 1.0, 1.0), CriticalFieldError);
}

TEST(EpsilonMaps, Examples) {
    EXPECT_EQ(epsilon_from_E(1.0, 0.0, 1.0), 0.0);
    EXPECT_NEAR(epsilon_from_E(1.289961, 0.6, 1.0), 1.6, 1e-6);
    EXPECT_NEAR(epsilon_from_E(0.0, 0.3, 2.0), -4.0, 1e-15);
    auto [p, m] = E_from_epsilon(0.0, 0.0, 1.0);
    EXPECT_EQ(p, 1.0);
    EXPECT_EQ(m, -1.0);
    auto [p2, m2] = E_from_epsilon(1.6, 0.6, 1.0);
    EXPECT_NEAR(p2, 1.289961, 1e-6);
    EXPECT_EQ(m2, -p2);
    EXPECT_THROW(E_from_epsilon(-5.0, 0.0, 2.0), NoRealEnergyError);
    EXPECT_THROW(epsilon_from_E(1.0, 1.0, 1.0), CriticalFieldError);
    EXPECT_THROW(E_from_epsilon(1.0, -1.5, 1.0), CriticalFieldError);
}

TEST(EpsilonMaps, RoundTrip) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> uk(-0.99, 0.99), ue(0.01, 20.0), um(0.0, 3.0);
    for (int t = 0; t < 500; ++t) {
        double k = uk(rng), e = ue(rng), m = um(rng);
        double back = E_from_epsilon(epsilon_from_E(e, k, m), k, m).first;
        EXPECT_LE(std::abs(back - e), 1e-12 * e);
    }
}

TEST(SchrodingerOperator, OscillatorGroundIsAnnihilated) {
    auto w = effective_superpotential(Superpotential::linear(1.0), 0.0, 1.0);
    auto t = schrodinger_operator(w, -1, kLinearGrid);
    EXPECT_NEAR(linalg::eigen_bisect(t, 1, 1)[0], 0.0, 1e-4);
    EXPECT_NEAR(extrapolated_levels(w, -1, kLinearGrid, 1)[0], 0.0, 1e-8);
}

TEST(SchrodingerOperator, OscillatorPartnerLevels) {
    auto w = effective_superpotential(Superpotential::linear(1.0), 0.0, 1.0);
    auto lv = extrapolated_levels(w, +1, kLinearGrid, 3);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(lv[i], 2.0 * (i + 1), 1e-5);
}

TEST(SchrodingerOperator, IsThreePointStencilPlusPotential) {
    auto w = effective_superpotential(Superpotential::tangent(5.0), 0.5, 2.0);
    Grid g = build_grid(std::numbers::pi / 2.0, 50, Family::Tangent);
    auto t = schrodinger_operator(w, +1, g);
    const double h = g.spacing();
    for (std::size_t i = 0; i < g.size(); ++i) {
        double x = g.x(i);
        double wt = 5.0 * std::sqrt(0.75) * std::tan(x) + 0.5 * 2.0 / std::sqrt(0.75);
        double wp = 5.0 * std::sqrt(0.75) / (std::cos(x) * std::cos(x));
        EXPECT_NEAR(t.diag[i], 2.0 / (h * h) + wt * wt + wp, 1e-9 * std::abs(t.diag[i]));
    }
    for (double e : t.offdiag) EXPECT_EQ(e, -1.0 / (h * h));
    EXPECT_THROW(schrodinger_operator(w, 0, g), ConfigError);
    EXPECT_THROW(schrodinger_operator(w, 1, Grid(2.0, 50)), DomainError);
}

TEST(SchrodingerOperator, PotentialIdentity) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uk(-0.99, 0.99), ue(-8.0, 8.0);
    for (const auto& sp : {Superpotential::linear(1.0), Superpotential::tangent(5.0)}) {
        Grid g = sp.family() == Family::Tangent ? kTanGrid : kLinearGrid;
        for (int t = 0; t < 20; ++t) {
            double k = uk(rng), e = ue(rng);
            auto w = effective_superpotential(sp, k, e);
            double offset = k * k * e * e / (1.0 - k * k);
            for (int sigma : {-1, +1})
                for (std::size_t i = 0; i < g.size(); ++i) {
                    double x = g.x(i);
                    double v12 = squared_potential(sp, k, e, sigma, x);
                    double v13 = susy_potential(w, sigma, x);
                    ASSERT_LE(std::abs(v13 - v12 - offset), 1e-10 * std::max(1.0, std::abs(v12)))
                        << "kappa=" << k << " E=" << e << " x=" << x;
                }
        }
    }
}

TEST(SchrodingerOperator, PartnerSpectraCoincide) {
    for (const auto& [sp, g] : {std::pair{Superpotential::linear(1.0), kLinearGrid},
                                std::pair{Superpotential::tangent(5.0), kTanGrid}}) {
        auto w = effective_superpotential(sp, 0.5, 1.3);
        auto minus = extrapolated_levels(w, -1, g, 6);
        auto plus = extrapolated_levels(w, +1, g, 5);
        for (int i = 0; i < 5; ++i)
            EXPECT_LE(std::abs(plus[i] - minus[i + 1]), 1e-6 * std::max(1.0, std::abs(plus[i])))
                << to_string(sp.family()) << " level " << i;
    }
}

TEST(SolveNonlinearLevel, ExampleOneZeroField) {
    auto r = solve_nonlinear_level(linear_params(0.0), -1, 1, kLinearGrid, std::sqrt(3.0));
    EXPECT_NEAR(r.plus.energy, std::sqrt(3.0), 1e-6);
    EXPECT_NEAR(r.minus.energy, -std::sqrt(3.0), 1e-6);
    EXPECT_EQ(r.plus.route, Route::Susy);
    EXPECT_EQ(r.plus.n_sigma, 1);
    EXPECT_TRUE(r.plus.converged);
}

TEST(SolveNonlinearLevel, ExampleOneInField) {
    auto a = solve_nonlinear_branch(linear_params(0.6), -1, 1, Branch::Plus, kLinearGrid, 1.29);
    auto b = solve_nonlinear_branch(linear_params(0.6), +1, 0, Branch::Plus, kLinearGrid, 1.29);
    EXPECT_NEAR(a.energy, 1.289961, 1e-5);
    EXPECT_NEAR(b.energy, 1.289961, 1e-5);
    ASSERT_TRUE(a.epsilon);
    EXPECT_NEAR(*a.epsilon, 1.6, 1e-5);
}

TEST(SolveNonlinearLevel, BranchesSolvedIndependently) {
    auto r = solve_nonlinear_level(linear_params(0.6), -1, 2, kLinearGrid);
    EXPECT_NEAR(r.plus.energy, oracle::linear_level(1, 1, 0.6, 2), 1e-6);
    EXPECT_NEAR(r.minus.energy, -oracle::linear_level(1, 1, 0.6, 2), 1e-6);
}

TEST(SolveNonlinearLevel, ZeroFieldFirstFiveLevelsBothFamilies) {
    for (int ns = 0; ns < 5; ++ns) {
        auto lin = solve_nonlinear_branch(linear_params(0.0), -1, ns, Branch::Plus, kLinearGrid,
                                          oracle::linear_level(1, 1, 0, ns));
        EXPECT_NEAR(lin.energy, oracle::linear_level(1, 1, 0, ns), 1e-6);
        auto tan = solve_nonlinear_branch(tan_params(0.0), -1, ns, Branch::Plus, kTanGrid);
        EXPECT_NEAR(tan.energy, oracle::tan_level(1, 5, 0, ns), 1e-6);
    }
}

TEST(SolveNonlinearLevel, TangentInFieldWithoutGuess) {
    for (int ns = 0; ns < 5; ++ns) {
        auto r = solve_nonlinear_branch(tan_params(0.5), -1, ns, Branch::Plus, kTanGrid);
        EXPECT_LE(oracle::rel(r.energy, oracle::tan_level(1, 5, 0.5, ns)), 1e-7) << ns;
    }
}

TEST(SolveNonlinearLevel, Errors) {
    EXPECT_THROW(solve_nonlinear_level(linear_params(1.05), -1, 0, kLinearGrid), CriticalFieldError);
    SusyOptions o;
    o.e_max = 0.5;
    EXPECT_THROW(solve_nonlinear_branch(linear_params(0.0), -1, 3, Branch::Plus, kLinearGrid, 0.0, o), BracketError);
    EXPECT_THROW(solve_nonlinear_branch(linear_params(0.0), 2, 0, Branch::Plus, kLinearGrid), ConfigError);
}

TEST(ReconstructSpinor, GroundStateMatchesLattice) {
    auto p = linear_params(0.0);
    auto lattice = dirac_spectrum(p, kLinearGrid, 1);
    auto e = solve_nonlinear_branch(p, -1, 0, Branch::Plus, kLinearGrid, 1.0).energy;
    auto phi = susy_eigenfunction(p, -1, 0, e, kLinearGrid);
    auto r = reconstruct_spinor(p, e, spin_pair(spin_eigensystem(0.0), -1), phi, kLinearGrid);
    EXPECT_GE(spinor_overlap(r.state, *lattice.state_of(Branch::Plus, 0), kLinearGrid), 0.999);
    EXPECT_NEAR(r.state.norm, 1.0, 1e-10);
    EXPECT_LE(r.residual, 1e-3);
}

TEST(ReconstructSpinor, BothSectorsGiveTheSameDiracState) {
    auto p = linear_params(0.6);
    auto lattice = dirac_spectrum(p, kLinearGrid, 3);
    auto spins = spin_eigensystem(0.6);
    for (int k = 1; k <= 2; ++k) {
        const SpinorState* ref = lattice.state_of(Branch::Plus, k);
        ASSERT_NE(ref, nullptr);
        for (int sigma : {-1, +1}) {
            int n = k - (1 + sigma) / 2;
            auto e = solve_nonlinear_branch(p, sigma, n, Branch::Plus, kLinearGrid, ref->energy).energy;
            auto phi = susy_eigenfunction(p, sigma, n, e, kLinearGrid);
            auto r = reconstruct_spinor(p, e, spin_pair(spins, sigma), phi, kLinearGrid);
            EXPECT_GE(spinor_overlap(r.state, *ref, kLinearGrid), 0.999) << "k=" << k << " sigma=" << sigma;
        }
    }
}

TEST(ReconstructSpinor, ResidualShrinksUnderRefinement) {
    auto p = linear_params(0.6);
    double res[2];
    Grid g = build_grid(20.0, 1000, Family::Linear);
    for (double& r : res) {
        auto e = solve_nonlinear_branch(p, -1, 1, Branch::Plus, g, 1.29).energy;
        auto phi = susy_eigenfunction(p, -1, 1, e, g);
        r = reconstruct_spinor(p, e, spin_pair(spin_eigensystem(0.6), -1), phi, g).residual;
        g = g.refined();
    }
    EXPECT_LT(res[1], res[0] / 1.8);
}

TEST(ReconstructSpinor, NegativeGroundIsAnnihilated) {
    auto p = linear_params(0.0);
    auto phi = susy_eigenfunction(p, -1, 0, -1.0, kLinearGrid);
    EXPECT_THROW(reconstruct_spinor(p, -1.0, spin_pair(spin_eigensystem(0.0), -1), phi, kLinearGrid),
                 DegenerateStateError);
}

TEST(ReconstructSpinor, RejectsMismatchedSamples) {
    std::vector<double> phi(10, 0.0);
    EXPECT_THROW(reconstruct_spinor(linear_params(0.0), 1.0, spin_eigensystem(0.0)[1], phi, kLinearGrid),
                 ConfigError);
}
