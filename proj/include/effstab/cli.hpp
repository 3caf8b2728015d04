#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "effstab/pipeline.hpp"

namespace effstab
{

// Binds every RunConfig field to a `--key value` option; the same keys are
// accepted as `key = value` lines in the file given by --config.
inline void bind_options(CLI::App &app, RunConfig &c)
{
    app.set_config("--config", "", "key = value configuration file");
    app.add_option("--mu", c.mu, "mass ratio");
    app.add_option("--seed_state", c.seed_state, "seed state x y z vx vy vz (decimals)")->expected(6);
    app.add_option("--seed_digits", c.seed_digits, "significant digits kept from the seed before Newton (0 keeps all)");
    app.add_option("--jacobi_mode", c.jacobi_mode, "recompute | fixed");
    app.add_option("--jacobi_value", c.jacobi_value, "Jacobi constant for jacobi_mode = fixed");
    app.add_option("--order", c.order, "jet order N_max");
    app.add_option("--tau", c.tau, "Diophantine exponent");
    app.add_option("--precision", c.precision, "fixed-point precision: binary64 | extended");
    app.add_option("--angle_precision", c.angle_precision, "Floquet-angle precision: binary64 | extended");
    app.add_option("--newton_tol", c.newton_tol, "Newton tolerance at binary64");
    app.add_option("--newton_tol_extended", c.newton_tol_extended, "Newton tolerance in extended precision");
    app.add_option("--res_tol", c.res_tol, "resonance threshold on the angle defect");
    app.add_option("--nf_tol", c.nf_tol, "normal-form residual tolerance (relative)");
    app.add_option("--scale_factor", c.scale_factor, "target degree-2 norm of F1 (sets p)");
    app.add_option("--years", c.years, "mission lengths in years");
    app.add_option("--revolution_days", c.revolution_days, "days per map iteration used to convert years");
    app.add_option("--validate", c.validate, "run the validation oracles (true | false)");
    app.add_option("--mc_samples", c.mc_samples, "Monte Carlo samples");
    app.add_option("--mc_iterations", c.mc_iterations, "Monte Carlo map iterations per sample");
    app.add_option("--mc_seed", c.mc_seed, "Monte Carlo RNG seed");
    app.add_option("--scan_order", c.scan_order, "normal-form order for the conjugacy residual scan");
    app.add_option("--scan_min", c.scan_min, "smallest scan radius");
    app.add_option("--scan_max", c.scan_max, "largest scan radius");
    app.add_option("--scan_points", c.scan_points, "number of scan radii");
    app.add_option("--scan_samples", c.scan_samples, "random phases per scan radius");
    app.add_option("--stm_step", c.stm_step, "finite-difference step for the STM check");
    app.add_option("--region_samples", c.region_samples, "grid size per direction for the stability region");
    app.add_option("--output_dir", c.output_dir, "artifact directory");
}

// Parses argv into cfg. Returns an exit code when the program should stop
// (help requested or a parse error), nothing otherwise.
inline std::optional<int> parse_command_line(int argc, const char *const *argv, RunConfig &cfg, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Effective-stability pipeline for elliptic periodic orbits of the spatial CR3BP", "effstab"};
    bind_options(app, cfg);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError &e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }
    try {
        cfg.validate_or_throw();
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }
    return std::nullopt;
}

inline std::optional<int> parse_command_line(const std::vector<std::string> &args, RunConfig &cfg, std::ostream &out, std::ostream &err)
{
    std::vector<const char *> argv{"effstab"};
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    return parse_command_line(static_cast<int>(argv.size()), argv.data(), cfg, out, err);
}

} // namespace effstab
