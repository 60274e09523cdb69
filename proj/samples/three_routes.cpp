// Lowest levels of the linear oscillator at one field strength, by all three
// routes, plus the overlap of the reconstructed and lattice ground spinors.
//
//   three_routes [kappa]

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "dirosc/analytic.hpp"
#include "dirosc/dirac_solver.hpp"
#include "dirosc/susy_reduction.hpp"

int main(int argc, char** argv) {
    using namespace dirosc;
    PhysicalParams p;
    p.kappa = argc > 1 ? std::atof(argv[1]) : 0.6;
    p.superpotential = Superpotential::linear(1.0);

    const int levels = 4;
    auto box = converge_box(p, levels);
    const Grid grid = build_grid(20.0, 4000, Family::Linear);

    std::printf("%8s %18s %18s %18s\n", "n_sigma", "analytic", "dirac", "susy");
    for (int ns = 0; ns < levels; ++ns) {
        double a = spectrum_linear(p.mass, 1.0, p.kappa, LevelIndex::from_n_sigma(ns, -1)).plus;
        const LatticeLevel* d = box.find(Branch::Plus, ns);
        auto s = solve_nonlinear_branch(p, -1, ns, Branch::Plus, grid, a);
        std::printf("%8d %18.12f %18.12f %18.12f\n", ns, a, d ? d->energy : NAN, s.energy);
    }

    auto lattice = dirac_spectrum(p, grid, 1);
    auto ground = solve_nonlinear_branch(p, -1, 0, Branch::Plus, grid, lattice.levels.front().energy);
    auto phi = susy_eigenfunction(p, -1, 0, ground.energy, grid);
    auto rebuilt = reconstruct_spinor(p, ground.energy, spin_pair(spin_eigensystem(p.kappa), -1), phi, grid);
    std::printf("ground overlap %.9f, residual %.2e\n",
                spinor_overlap(rebuilt.state, *lattice.state_of(Branch::Plus, 0), grid), rebuilt.residual);
}
