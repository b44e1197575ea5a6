// Command-line front end. Flags override keys from --config.

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "randpoly/cli_runner.hpp"

using nlohmann::json;

int main(int argc, char** argv)
{
    CLI::App app{"Real and complex roots of random polynomials"};
    std::string command;
    std::string config_path;
    app.add_option("command", command, "density | expect | mc-count | mc-var | mc-density | mc-corr | "
                                       "rotation | probe-repulsion | probe-anticonc | compare | "
                                       "slopes | selftest")
        ->required();
    app.add_option("--config", config_path, "JSON config file; flags take precedence");

    // every other flag maps onto the config key of the same name
    struct Flag {
        char const* flag;
        char const* key;
        char const* help;
    };
    const std::vector<Flag> flags = {
        {"--profile", "profile", "kac, hyperbolic:L=4, kac_derivative:d=1, power_law:rho=..., "
                                 "genpoly:terms=L/a;..., explicit:file=... or explicit:values=a;b"},
        {"--profiles", "profiles", "'|'-separated profile list (compare)"},
        {"--atom", "atom", "gaussian[:mu=m], rademacher, uniform, complex_gaussian"},
        {"--atoms", "atoms", "comma-separated atom list (compare)"},
        {"--n", "n", "polynomial degree"},
        {"--n-grid", "n_grid", "256:16384:x2, 10:50:+10 or 64,256,1024"},
        {"--interval", "interval", "all, a:b, disk:re:im:r or annulus:re:im:rin:rout"},
        {"--samples", "samples", "Monte Carlo samples"},
        {"--seed", "seed", "root seed, decimal or 0x-hex"},
        {"--workers", "workers", "worker threads (default RANDPOLY_WORKERS or hardware)"},
        {"--out", "out", "artifact directory"},
        {"--fixture", "fixture", "frozen constants file for selftest"},
        {"--method", "method", "ek_raw, ek_logvar, kac_closed, kacrice_mean, limiting"},
        {"--grid", "grid", "density grid lo:hi:count"},
        {"--bins", "bins", "histogram bins (mc-density)"},
        {"--kind", "kind", "complex or mixed"},
        {"--k", "k", "correlation order (real slots for mixed)"},
        {"--l", "l", "complex slots for mixed correlations"},
        {"--delta", "delta", "window parameter"},
        {"--support", "support", "test function support radius"},
        {"--angle", "angle", "angle of the complex window centers"},
        {"--theta", "theta", "rotation angle (rotation)"},
        {"--x", "x", "probe location (probe-repulsion)"},
        {"--gammas", "gammas", "comma-separated radii in units of --unit"},
        {"--unit", "unit", "radius unit (default 1e-3 delta)"},
        {"--weights", "weights", "comma-separated weights (probe-anticonc)"},
        {"--z", "z", "ball center re or re:im (probe-anticonc)"},
        {"--radius", "radius", "ball radius (probe-anticonc)"},
        {"--dump-roots", "dump_roots", "write roots of the first N samples to roots.csv"},
    };
    std::map<std::string, std::string> values;
    std::vector<std::pair<CLI::Option*, char const*>> opts;
    for (auto const& f : flags)
        opts.emplace_back(app.add_option(f.flag, values[f.key], f.help), f.key);

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        std::cerr << randpoly::cli::error_payload("usage", e.what()).dump() << "\n";
        return 2;
    }

    json cfg = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << randpoly::cli::error_payload("io", "cannot read " + config_path).dump()
                      << "\n";
            return 3;
        }
        try {
            cfg = json::parse(in);
        } catch (json::exception const& e) {
            std::cerr << randpoly::cli::error_payload("validation", e.what()).dump() << "\n";
            return 2;
        }
        if (!cfg.is_object()) {
            std::cerr << randpoly::cli::error_payload("validation", "config must be a JSON object")
                             .dump()
                      << "\n";
            return 2;
        }
    }
    cfg["command"] = command;
    for (auto const& [opt, key] : opts)
        if (opt->count() > 0) {
            if (std::string(key) == "n" && cfg.contains("n_grid"))
                cfg.erase("n_grid");
            if (std::string(key) == "n_grid" && cfg.contains("n"))
                cfg.erase("n");
            if (std::string(key) == "profile")
                cfg.erase("profiles");
            if (std::string(key) == "atom")
                cfg.erase("atoms");
            cfg[key] = values[key];
        }
    return randpoly::cli::run(cfg, std::cout, std::cerr);
}
