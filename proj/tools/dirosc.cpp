// dirosc: spectra of the generalized Dirac oscillator in a nonuniform field.

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dirosc/cli/commands.hpp"
#include "dirosc/cli/run_config.hpp"

namespace {

using namespace dirosc;
using namespace dirosc::cli;

struct GlobalOptions {
    std::string config_path;
    std::map<std::string, std::string> overrides;
    std::string output;
    std::string format;
};

void add_global_options(CLI::App& app, GlobalOptions& g) {
    app.add_option("--config", g.config_path, "Config file (section.key = value per line)");
    app.add_option("--output", g.output, "Write the table to this path instead of stdout");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    for (auto key : kConfigKeys) {
        std::string name = "--" + std::string(key);
        app.add_option_function<std::string>(
            name, [&g, k = std::string(key)](const std::string& v) { g.overrides[k] = v; },
            "Override " + std::string(key));
    }
}

RunConfig resolve(const GlobalOptions& g) {
    ConfigMap base;
    if (!g.config_path.empty()) base = load_config_file(g.config_path);
    ConfigMap overrides = g.overrides;
    if (!g.output.empty()) overrides["output.path"] = g.output;
    if (!g.format.empty()) overrides["output.format"] = g.format;
    return make_run_config(base, overrides);
}

template <class Fn>
int with_output(const RunConfig& cfg, Fn&& fn) {
    if (cfg.output_path.empty()) return fn(std::cout);
    std::ofstream file(cfg.output_path);
    if (!file) {
        std::cerr << "error: cannot open " << cfg.output_path << " for writing\n";
        return kExitConfig;
    }
    return fn(file);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized 1+1D Dirac oscillator: analytic, lattice and SUSY spectra"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    add_global_options(app, g);

    auto* spectrum = app.add_subcommand("spectrum", "Spectrum table from the selected route(s)");
    auto* sweep = app.add_subcommand("sweep-kappa", "Lattice levels over a list of field strengths");
    std::vector<double> kappas;
    sweep->add_option("--kappas", kappas, "Comma-separated kappa values")->delimiter(',');
    auto* verify = app.add_subcommand("verify", "Cross-route and identity checks, PASS/FAIL per check");
    auto* wave = app.add_subcommand("wavefunction", "Lattice and reconstructed spinor densities for one level");
    LevelSelector sel;
    std::string branch = "+";
    wave->add_option("--sigma", sel.sigma, "Spin sector, +1 or -1");
    wave->add_option("--n", sel.n, "Level index within the sector");
    wave->add_option("--branch", branch, "Energy branch")->check(CLI::IsMember({"+", "-"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    RunConfig cfg;
    try {
        cfg = resolve(g);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    if (spectrum->parsed()) return with_output(cfg, [&](std::ostream& out) { return cmd_spectrum(cfg, out, std::cerr); });
    if (sweep->parsed())
        return with_output(cfg, [&](std::ostream& out) { return cmd_sweep_kappa(cfg, kappas, out, std::cerr); });
    if (verify->parsed()) return with_output(cfg, [&](std::ostream& out) { return cmd_verify(cfg, out, std::cerr); });
    if (wave->parsed()) {
        sel.branch = branch == "-" ? Branch::Minus : Branch::Plus;
        return with_output(cfg, [&](std::ostream& out) { return cmd_wavefunction(cfg, sel, out, std::cerr); });
    }
    return kExitConfig;
}
