#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include "effstab/diagonalize.hpp"
#include "effstab/estimates.hpp"
#include "effstab/jet_io.hpp"
#include "effstab/normal_form.hpp"
#include "effstab/section.hpp"
#include "effstab/validate.hpp"

namespace effstab
{

inline constexpr const char *effstab_version = "1.0.0";
inline constexpr int schema_version = 1;

enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_config = 2,
    exit_newton = 3,
    exit_spectrum = 4,
    exit_normalization = 5,
    exit_estimate = 6,
    exit_io = 7,
};

// Reference halo-orbit initial condition (x, y, z, vx, vy, vz), 37 digits.
inline const std::array<std::string, 6> &reference_state()
{
    static const std::array<std::string, 6> s{"1.07442699836894799731734842966765573872",
                                              "0",
                                              "-2.02077758410419468689345932453312581546e-1",
                                              "0",
                                              "-1.91460361329368351175536906288136125112e-1",
                                              "0"};
    return s;
}

struct RunConfig {
    double mu = earth_moon_mu;
    std::array<std::string, 6> seed_state = reference_state();
    // Significant digits kept from the seed before Newton (0 keeps all).
    int seed_digits = 8;
    std::string jacobi_mode = "recompute";  // recompute | fixed
    double jacobi_value = 0;
    int order = 15;
    double tau = 2;
    std::string precision = "binary64";         // fixed-point refinement
    std::string angle_precision = "extended";   // Floquet angles for the divisors
    double newton_tol = 1e3 * std::numeric_limits<double>::epsilon();
    double newton_tol_extended = 1e-30;
    double res_tol = 1e-8;
    double nf_tol = 1e-10;
    double scale_factor = 1;
    std::vector<double> years{10, 15, 50};
    double revolution_days = 10;
    bool validate = true;
    int mc_samples = 64;
    int mc_iterations = 548;
    std::uint64_t mc_seed = 20240101;
    // Order of the normal form used by the conjugacy scan, capped at `order`.
    int scan_order = 8;
    double scan_min = 1e-4;
    double scan_max = 1e-2;
    int scan_points = 5;
    int scan_samples = 4;
    double stm_step = 1e-6;
    int region_samples = 12;
    std::string output_dir = "effstab_out";

    void validate_or_throw() const
    {
        auto need = [](bool ok, const std::string &what) {
            if (!ok) {
                throw ConfigError(what);
            }
        };
        need(mu > 0 && mu < 0.5, "mu must lie in (0, 1/2)");
        need(seed_digits >= 0 && seed_digits <= 40, "seed_digits must lie in [0, 40]");
        need(jacobi_mode == "recompute" || jacobi_mode == "fixed", "jacobi_mode must be 'recompute' or 'fixed'");
        need(order >= 2 && order <= 40, "order must lie in [2, 40]");
        need(tau >= 1, "tau must be >= 1");
        need(precision == "binary64" || precision == "extended", "precision must be 'binary64' or 'extended'");
        need(angle_precision == "binary64" || angle_precision == "extended", "angle_precision must be 'binary64' or 'extended'");
        need(newton_tol > 0 && newton_tol_extended > 0 && res_tol > 0 && nf_tol > 0, "tolerances must be positive");
        need(scale_factor > 0, "scale_factor must be positive");
        need(!years.empty(), "years must list at least one mission length");
        for (double y : years) {
            need(y > 0, "mission years must be positive");
        }
        need(revolution_days > 0, "revolution_days must be positive");
        need(mc_samples >= 0 && mc_iterations >= 0, "Monte Carlo sizes must be non-negative");
        need(scan_order >= 2, "scan_order must be >= 2");
        need(scan_min > 0 && scan_max > scan_min && scan_points >= 2 && scan_samples >= 1, "invalid residual scan grid");
        need(stm_step > 0, "stm_step must be positive");
        need(region_samples >= 2, "region_samples must be >= 2");
        need(!output_dir.empty(), "output_dir must not be empty");
        for (const auto &s : seed_state) {
            try {
                std::size_t pos = 0;
                (void)std::stod(s, &pos);
                need(pos == s.size(), "");
            } catch (const std::exception &) {
                throw ConfigError("seed state entry '" + s + "' is not a decimal number");
            }
        }
    }
};

// Shortest decimal that reads back to x.
inline std::string shortest_decimal(double x)
{
    return fmt::format("{}", x);
}

// Keeps `digits` significant digits of x, dropping the rest.
inline double truncate_significant(double x, int digits)
{
    if (digits <= 0 || x == 0 || !std::isfinite(x)) {
        return x;
    }
    const int e = static_cast<int>(std::floor(std::log10(std::abs(x))));
    const double f = std::pow(10.0, digits - 1 - e);
    return std::trunc(x * f) / f;
}

struct RegionCloud {
    double a = 0;
    std::vector<std::array<double, 5>> points;  // x, z, vx, vz, vy
    int skipped = 0;
};

// Boundary of {|z1| <= a, |z2| <= a}: on each face |z_l| = a the other radius
// runs over n values in [0, a] and both phases over n values in [0, 2 pi).
inline RegionCloud emit_stability_region(const NormalForm &nf, double a, const FixedPoint<double> &fp, const MassRatio<double> &mu, int n)
{
    RegionCloud cloud;
    cloud.a = a;
    auto add = [&](const std::array<cplx, 4> &z) {
        const auto u = nf_to_section_point(nf, fp, z);
        try {
            const double vy = vy_from_jacobi(u[0], u[1], u[2], u[3], fp.jacobi, mu, -1);
            cloud.points.push_back({u[0], u[1], u[2], u[3], vy});
        } catch (const DomainError &) {
            ++cloud.skipped;
        }
    };
    if (a == 0) {
        add({});
        return cloud;
    }
    const double two_pi = 2 * std::numbers::pi;
    for (int face = 0; face < 2; ++face) {
        for (int i = 0; i < n; ++i) {
            const double other = a * i / (n - 1);
            for (int p = 0; p < n; ++p) {
                for (int q = 0; q < n; ++q) {
                    const double t1 = two_pi * p / n, t2 = two_pi * q / n;
                    add(face == 0 ? nf_point(a, t1, other, t2) : nf_point(other, t1, a, t2));
                }
            }
        }
    }
    return cloud;
}

inline double region_diameter(const RegionCloud &c)
{
    double d = 0;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        for (std::size_t j = i + 1; j < c.points.size(); ++j) {
            double s = 0;
            for (std::size_t k = 0; k < 4; ++k) {
                s += (c.points[i][k] - c.points[j][k]) * (c.points[i][k] - c.points[j][k]);
            }
            d = std::max(d, std::sqrt(s));
        }
    }
    return d;
}

struct SpectrumReport {
    Spectrum sp;
    std::array<std::array<double, 4>, 4> monodromy{};
    double determinant = 0;
    std::array<double, 2> solver_angles{};
    std::optional<std::array<std::string, 2>> extended_angles;
    double diagonalization_residual = 0;
};

struct PipelineResult {
    RunConfig cfg;
    SectionCoords<double> seed{};
    FixedPoint<double> fp;
    std::optional<FixedPoint<extended>> fp_ext;
    double vy0 = 0;
    PoincareMapJet<double> map;
    SpectrumReport spectrum;
    NormalForm nf;
    StabilityConstants constants;
    std::optional<StmCheck> stm;
    std::optional<ResidualScan> scan;
    std::optional<NormalForm> scan_nf;
    std::optional<DriftReport> drift;
    RegionCloud region;
    std::vector<std::string> warnings;
    std::map<std::string, double> stage_seconds;  // wall clock, never written to disk
};

class StageError : public Error
{
public:
    StageError(std::string stage, int code, const std::string &what) : Error("[" + stage + "] " + what), stage_(std::move(stage)), code_(code) {}
    const std::string &stage() const
    {
        return stage_;
    }
    int code() const
    {
        return code_;
    }

private:
    std::string stage_;
    int code_;
};

namespace detail
{

inline int code_for(const std::exception &e, int stage_default)
{
    if (dynamic_cast<const ConfigError *>(&e)) {
        return exit_config;
    }
    if (dynamic_cast<const IoError *>(&e)) {
        return exit_io;
    }
    if (dynamic_cast<const NewtonError *>(&e)) {
        return exit_newton;
    }
    if (dynamic_cast<const SpectrumError *>(&e)) {
        return exit_spectrum;
    }
    if (dynamic_cast<const NormalizationError *>(&e)) {
        return exit_normalization;
    }
    if (dynamic_cast<const EstimateError *>(&e)) {
        return exit_estimate;
    }
    return stage_default;
}

template <typename F>
void run_stage(const std::string &name, int stage_default, std::ostream &log, std::map<std::string, double> &seconds, F &&f)
{
    const auto t0 = std::chrono::steady_clock::now();
    try {
        f();
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        seconds[name] = dt;
        log << fmt::format("[{}] done in {:.2f} s\n", name, dt);
    } catch (const StageError &) {
        throw;
    } catch (const std::exception &e) {
        throw StageError(name, code_for(e, stage_default), e.what());
    }
}

} // namespace detail

inline FixedPoint<extended> extended_fixed_point(const RunConfig &cfg, const SectionCoords<double> &seed)
{
    const MassRatio<extended> mu{from_decimal<extended>(shortest_decimal(cfg.mu))};
    State6<extended> s;
    for (std::size_t i = 0; i < 6; ++i) {
        s[i] = from_decimal<extended>(cfg.seed_state[i]);
    }
    const extended C = cfg.jacobi_mode == "fixed" ? extended(cfg.jacobi_value) : jacobi_constant(s, mu);
    SectionCoords<extended> u;
    for (std::size_t i = 0; i < 4; ++i) {
        u[i] = extended(seed[i]);
    }
    return refine_fixed_point(u, C, mu, extended(cfg.newton_tol_extended));
}

inline FixedPoint<double> to_double(const FixedPoint<extended> &f)
{
    FixedPoint<double> d;
    for (std::size_t i = 0; i < 4; ++i) {
        d.u0[i] = static_cast<double>(f.u0[i]);
    }
    d.period = static_cast<double>(f.period);
    d.jacobi = static_cast<double>(f.jacobi);
    d.residual = static_cast<double>(f.residual);
    d.iterations = f.iterations;
    return d;
}

// Runs every computational stage; writes nothing. Stage failures surface as
// StageError carrying the exit code.
inline PipelineResult compute_pipeline(const RunConfig &cfg, std::ostream &log)
{
    PipelineResult r;
    detail::run_stage("config", exit_config, log, r.stage_seconds, [&] { cfg.validate_or_throw(); });
    r.cfg = cfg;
    const MassRatio<double> mu{cfg.mu};

    detail::run_stage("fixed_point", exit_newton, log, r.stage_seconds, [&] {
        State6<double> s;
        for (std::size_t i = 0; i < 6; ++i) {
            s[i] = std::stod(cfg.seed_state[i]);
        }
        if (std::abs(s[iy]) > 0) {
            throw ConfigError("seed state must lie on the section y = 0");
        }
        const auto sec = project_to_section(s);
        for (std::size_t i = 0; i < 4; ++i) {
            r.seed[i] = truncate_significant(sec[i], cfg.seed_digits);
        }
        const bool need_ext = cfg.precision == "extended" || cfg.angle_precision == "extended";
        if (need_ext) {
            r.fp_ext = extended_fixed_point(cfg, r.seed);
        }
        if (cfg.precision == "extended") {
            r.fp = to_double(*r.fp_ext);
        } else {
            const double C = cfg.jacobi_mode == "fixed" ? cfg.jacobi_value : jacobi_constant(s, mu);
            r.fp = refine_fixed_point(r.seed, C, mu, cfg.newton_tol);
        }
        r.vy0 = lift_to_state(r.fp.u0, r.fp.jacobi, mu)[ivy];
        log << fmt::format("[fixed_point] x0 = {:.17g}, z0 = {:.17g}, T = {:.17g}, residual {:.3g} after {} iterations\n", r.fp.u0[0], r.fp.u0[1],
                           r.fp.period, r.fp.residual, r.fp.iterations);
    });

    detail::run_stage("map_jet", exit_newton, log, r.stage_seconds, [&] { r.map = poincare_map_jet(r.fp, mu, cfg.order); });

    detail::run_stage("spectrum", exit_spectrum, log, r.stage_seconds, [&] {
        auto &rep = r.spectrum;
        rep.monodromy = linear_part(r.map.G);
        const Matrix4r M = to_eigen(rep.monodromy);
        rep.determinant = M.determinant();
        rep.sp = spectrum_of(M, SpectrumSettings{1e-6, 1e-8, cfg.res_tol});
        rep.solver_angles = rep.sp.angles;
        if (cfg.angle_precision == "extended") {
            const MassRatio<extended> mu_ext{from_decimal<extended>(shortest_decimal(cfg.mu))};
            const auto lin = poincare_map_jet(*r.fp_ext, mu_ext, 1);
            const auto a = symplectic_angles(linear_part(lin.G));
            refine_angles(rep.sp, {static_cast<double>(a[0]), static_cast<double>(a[1])});
            const bool first_is_larger = a[0] > a[1];
            rep.extended_angles = std::array<std::string, 2>{to_decimal(first_is_larger ? a[0] : a[1]), to_decimal(first_is_larger ? a[1] : a[0])};
        }
        fix_scale(r.map.G, rep.sp, cfg.scale_factor);
        rep.diagonalization_residual = diagonalization_residual(M, rep.sp);
    });

    detail::run_stage("normal_form", exit_normalization, log, r.stage_seconds, [&] {
        NormalFormSettings set;
        set.tau = cfg.tau;
        set.res_tol = cfg.res_tol;
        set.nf_tol = cfg.nf_tol;
        r.nf = normalize(linear_normalize(r.map.G, r.spectrum.sp), r.spectrum.sp, set);
    });

    detail::run_stage("estimates", exit_estimate, log, r.stage_seconds, [&] {
        r.constants = stability_constants(r.map.G, r.nf.divisors, cfg.order, cfg.tau, cfg.years, cfg.revolution_days);
        for (const auto &m : r.constants.missions) {
            if (m.n_opt_clamped) {
                r.warnings.push_back(fmt::format("N_opt for {} years exceeds the computed order; clamped to N = {}", m.years, cfg.order));
            } else if (m.N_opt == cfg.order) {
                r.warnings.push_back(fmt::format("N_opt for {} years equals the computed order N = {}", m.years, cfg.order));
            }
        }
    });

    double a_region = r.constants.a0;
    double eps_region = 0;
    for (const auto &m : r.constants.missions) {
        if (m.a <= a_region) {
            a_region = m.a;
            eps_region = m.eps_opt;
        }
    }

    if (cfg.validate) {
        detail::run_stage("validation", exit_estimate, log, r.stage_seconds, [&] {
            r.stm = stm_finite_difference_check(r.fp, mu, cfg.stm_step);
            NormalFormSettings set = r.nf.settings;
            const int scan_order = std::min(cfg.scan_order, cfg.order);
            if (scan_order == cfg.order) {
                r.scan_nf = r.nf;
            } else {
                r.scan_nf = normalize(linear_normalize(r.map.G.resized(scan_order), r.spectrum.sp), r.spectrum.sp, set);
            }
            r.scan = conjugacy_residual_scan(r.fp, *r.scan_nf, mu, log_spaced(cfg.scan_min, cfg.scan_max, cfg.scan_points), cfg.scan_samples);
            r.drift = monte_carlo_drift(r.fp, r.nf, a_region, cfg.mc_samples, cfg.mc_iterations, mu, eps_region, cfg.mc_seed);
            if (r.drift->escapes > 0 || r.drift->violations > 0) {
                r.warnings.push_back(fmt::format("Monte Carlo: {} escapes and {} confinement violations", r.drift->escapes, r.drift->violations));
            }
        });
    }

    detail::run_stage("stability_region", exit_estimate, log, r.stage_seconds, [&] {
        r.region = emit_stability_region(r.nf, a_region, r.fp, mu, cfg.region_samples);
        if (r.region.skipped > 0) {
            r.warnings.push_back(fmt::format("stability region: {} samples off the energy surface skipped", r.region.skipped));
        }
    });
    for (const auto &w : r.warnings) {
        log << "[warning] " << w << '\n';
    }
    return r;
}

namespace io
{

using nlohmann::ordered_json;

inline std::string num(double x)
{
    if (std::isnan(x)) {
        return "nan";
    }
    return fmt::format("{:.17g}", x);
}

inline std::string schema_line(const std::string &name)
{
    return fmt::format("# schema: effstab.{} v{}\n", name, schema_version);
}

class Writer
{
public:
    explicit Writer(std::filesystem::path dir) : dir_(std::move(dir))
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) {
            throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
        }
    }

    void text(const std::string &name, const std::string &content)
    {
        std::ofstream os(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!os) {
            throw IoError("cannot open '" + (dir_ / name).string() + "' for writing");
        }
        os << content;
        os.flush();
        if (!os) {
            throw IoError("write to '" + (dir_ / name).string() + "' failed");
        }
        files_.push_back(name);
    }

    void json(const std::string &name, const std::string &schema, ordered_json body)
    {
        ordered_json j;
        j["schema"] = fmt::format("effstab.{} v{}", schema, schema_version);
        for (auto &[k, v] : body.items()) {
            j[k] = v;
        }
        text(name, j.dump(2) + "\n");
    }

    const std::vector<std::string> &files() const
    {
        return files_;
    }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

inline ordered_json complex_json(const cplx &z)
{
    return ordered_json::array({z.real(), z.imag()});
}

inline std::string gamma_table_csv(const std::vector<DivisorRecord> &rows)
{
    std::string s = schema_line("gamma_table") + "k,gamma_k,gamma_running,j1,j2,j3,j4,i\n";
    for (const auto &d : rows) {
        s += fmt::format("{},{},{},{},{},{},{},{}\n", d.k, num(d.gamma_k), num(d.gamma_running), d.argmin_j[0], d.argmin_j[1], d.argmin_j[2],
                         d.argmin_j[3], d.argmin_i + 1);
    }
    return s;
}

inline std::string rho_series_csv(const RhoSeries &r)
{
    std::string s = schema_line("rho_series") + "k,rho_k,rho_min\n";
    for (std::size_t k = 0; k < r.rho_k.size(); ++k) {
        s += fmt::format("{},{},{}\n", k + 1, num(r.rho_k[k]), num(r.running_min[k]));
    }
    return s;
}

inline std::string constants_by_order_csv(const StabilityConstants &c)
{
    std::string s = schema_line("constants_by_order") + "k,rho_k,rho_min,gamma_k,gamma_min,L,Q,eps2,A,C,N_opt,a0\n";
    for (const auto &r : c.per_order) {
        s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.k, num(r.rho_k), num(r.rho_min), num(r.gamma_k), num(r.gamma_min), num(r.L),
                         num(r.Q), num(r.eps2), num(r.A), num(r.C), r.N_opt, num(r.a0));
    }
    return s;
}

inline ordered_json constants_json(const StabilityConstants &c, const std::vector<std::string> &warnings)
{
    ordered_json j;
    j["tau"] = c.tau;
    j["N"] = c.N;
    j["rho"] = c.rho;
    j["gamma"] = c.gamma;
    j["L"] = c.L;
    j["Q"] = c.Q;
    j["eps2"] = c.eps2;
    j["A"] = c.A;
    j["C"] = c.C;
    j["a0"] = c.a0;
    j["rho_series"] = c.rho_series.rho_k;
    j["iteration_unit"] = "map iterations";
    ordered_json ms = ordered_json::array();
    for (const auto &m : c.missions) {
        ordered_json e;
        e["years"] = m.years;
        e["iterations"] = m.iterations;
        e["branch"] = m.below_C ? "T < C: a(T) = a0" : "T >= C: long-time radius";
        e["below_C"] = m.below_C;
        e["a"] = m.a;
        e["N_opt"] = m.N_opt;
        e["N_opt_clamped"] = m.n_opt_clamped;
        e["T_eff"] = m.T_eff;
        e["eps_opt"] = m.eps_opt;
        ms.push_back(e);
    }
    j["missions"] = ms;
    j["warnings"] = warnings;
    return j;
}

inline std::string twist_csv(const Twist &tw)
{
    std::string s = schema_line("twist") + "dof,m1,m2,beta\n";
    for (std::size_t l = 0; l < 2; ++l) {
        const auto &b = tw.omega[l];
        const auto &t = b.table();
        for (std::size_t k = 0; k < b.size(); ++k) {
            const auto *e = t.exponents(k);
            s += fmt::format("{},{},{},{}\n", l + 1, static_cast<int>(e[0]), static_cast<int>(e[1]), num(b[k]));
        }
    }
    return s;
}

inline std::string region_csv(const RegionCloud &c, bool physical)
{
    const double L = earth_moon_distance_km;
    const double V = earth_moon_distance_km / (time_unit_days * 86400.0) * 1000.0;
    std::string s = schema_line(physical ? "stability_region_physical" : "stability_region");
    s += physical ? "x_km,z_km,vx_mps,vz_mps,vy_mps\n" : "x,z,vx,vz,vy\n";
    for (const auto &p : c.points) {
        if (physical) {
            s += fmt::format("{},{},{},{},{}\n", num(p[0] * L), num(p[1] * L), num(p[2] * V), num(p[3] * V), num(p[4] * V));
        } else {
            s += fmt::format("{},{},{},{},{}\n", num(p[0]), num(p[1]), num(p[2]), num(p[3]), num(p[4]));
        }
    }
    return s;
}

inline std::string residual_csv(const ResidualScan &r)
{
    std::string s = schema_line("residual_scan") + "radius,max_residual\n";
    for (std::size_t i = 0; i < r.radii.size(); ++i) {
        s += fmt::format("{},{}\n", num(r.radii[i]), num(r.max_residual[i]));
    }
    return s;
}

template <typename S>
std::string jet_file(const std::string &schema, const JetVector<S> &f)
{
    std::ostringstream os;
    os << schema_line(schema);
    write_jet_vector(os, f);
    return os.str();
}

inline ordered_json config_json(const RunConfig &c)
{
    ordered_json j;
    j["mu"] = c.mu;
    j["seed_state"] = c.seed_state;
    j["seed_digits"] = c.seed_digits;
    j["jacobi_mode"] = c.jacobi_mode;
    j["jacobi_value"] = c.jacobi_value;
    j["order"] = c.order;
    j["tau"] = c.tau;
    j["precision"] = c.precision;
    j["angle_precision"] = c.angle_precision;
    j["newton_tol"] = c.newton_tol;
    j["newton_tol_extended"] = c.newton_tol_extended;
    j["res_tol"] = c.res_tol;
    j["nf_tol"] = c.nf_tol;
    j["scale_factor"] = c.scale_factor;
    j["years"] = c.years;
    j["revolution_days"] = c.revolution_days;
    j["validate"] = c.validate;
    j["mc_samples"] = c.mc_samples;
    j["mc_iterations"] = c.mc_iterations;
    j["mc_seed"] = c.mc_seed;
    j["scan_order"] = c.scan_order;
    j["scan_min"] = c.scan_min;
    j["scan_max"] = c.scan_max;
    j["scan_points"] = c.scan_points;
    j["scan_samples"] = c.scan_samples;
    j["stm_step"] = c.stm_step;
    j["region_samples"] = c.region_samples;
    j["output_dir"] = c.output_dir;
    return j;
}

} // namespace io

// Writes every artifact of a computed pipeline into cfg.output_dir.
inline std::vector<std::string> write_outputs(const PipelineResult &r)
{
    using io::ordered_json;
    io::Writer w(r.cfg.output_dir);

    {
        ordered_json j;
        j["precision"] = r.cfg.precision;
        j["seed"] = {r.seed[0], r.seed[1], r.seed[2], r.seed[3]};
        j["x0"] = r.fp.u0[0];
        j["z0"] = r.fp.u0[1];
        j["vx0"] = r.fp.u0[2];
        j["vz0"] = r.fp.u0[3];
        j["vy0"] = r.vy0;
        j["period"] = r.fp.period;
        j["jacobi"] = r.fp.jacobi;
        j["residual"] = r.fp.residual;
        j["iterations"] = r.fp.iterations;
        if (r.fp_ext) {
            const auto &f = *r.fp_ext;
            ordered_json e;
            e["x0"] = to_decimal(f.u0[0]);
            e["z0"] = to_decimal(f.u0[1]);
            e["vx0"] = to_decimal(f.u0[2]);
            e["vz0"] = to_decimal(f.u0[3]);
            e["period"] = to_decimal(f.period);
            e["jacobi"] = to_decimal(f.jacobi);
            e["residual"] = to_decimal(f.residual);
            e["iterations"] = f.iterations;
            j["extended"] = e;
        }
        w.json("fixed_point.json", "fixed_point", j);
    }
    {
        const auto &rep = r.spectrum;
        const auto &sp = rep.sp;
        ordered_json j;
        j["ordering"] = "lambda1, conj lambda1, lambda2, conj lambda2";
        j["angles"] = sp.angles;
        j["angle_source"] = rep.extended_angles ? "extended-precision monodromy" : "binary64 eigen-solver";
        j["solver_angles"] = rep.solver_angles;
        if (rep.extended_angles) {
            j["extended_angles"] = *rep.extended_angles;
        }
        ordered_json ev = ordered_json::array();
        for (const auto &l : sp.eigenvalues) {
            ev.push_back(io::complex_json(l));
        }
        j["eigenvalues"] = ev;
        j["moduli"] = sp.moduli;
        j["monodromy"] = rep.monodromy;
        j["determinant"] = rep.determinant;
        j["p_scale"] = sp.p_scale;
        ordered_json V = ordered_json::array();
        for (int i = 0; i < 4; ++i) {
            ordered_json row = ordered_json::array();
            for (int k = 0; k < 4; ++k) {
                row.push_back(io::complex_json(sp.V(i, k)));
            }
            V.push_back(row);
        }
        j["V"] = V;
        j["diagonalization_residual"] = rep.diagonalization_residual;
        w.json("spectrum.json", "spectrum", j);
    }
    w.text("map_G.jet", io::jet_file("map_jet", r.map.G));
    w.text("map_T.jet", io::jet_file("return_time_jet", JetVector<double>(std::vector<Jet<double>>{r.map.T})));
    w.text("nf_F.jet", io::jet_file("normal_form_jet", r.nf.F));
    w.text("nf_transform.jet", io::jet_file("normal_form_transform", r.nf.transform));
    w.text("nf_inverse.jet", io::jet_file("normal_form_inverse", r.nf.inverse));
    w.text("twist.csv", io::twist_csv(r.nf.twist));
    w.text("gamma_table.csv", io::gamma_table_csv(r.nf.divisors));
    {
        ordered_json j;
        j["order"] = r.nf.order;
        j["tau"] = r.nf.settings.tau;
        j["res_tol"] = r.nf.settings.res_tol;
        j["nf_tol"] = r.nf.settings.nf_tol;
        j["max_nonresonant"] = r.nf.max_nonresonant;
        j["max_lower_degree_change"] = r.nf.max_lower_degree_change;
        j["dropped_constant"] = r.nf.dropped_constant;
        j["dropped_linear"] = r.nf.dropped_linear;
        j["reality_defect"] = reality_defect(r.nf.F);
        j["twist_reality_defect"] = r.nf.twist.reality_defect;
        j["resonant_terms"] = r.nf.resonant_set.size();
        w.json("normal_form.json", "normal_form", j);
    }
    w.text("rho_series.csv", io::rho_series_csv(r.constants.rho_series));
    w.json("constants.json", "constants", io::constants_json(r.constants, r.warnings));
    w.text("constants_by_order.csv", io::constants_by_order_csv(r.constants));
    w.text("stability_region.csv", io::region_csv(r.region, false));
    w.text("stability_region_physical.csv", io::region_csv(r.region, true));
    if (r.scan) {
        w.text("residual_scan.csv", io::residual_csv(*r.scan));
    }
    if (r.drift) {
        const auto &d = *r.drift;
        ordered_json j;
        j["samples"] = d.samples;
        j["iterations"] = d.iterations;
        j["a"] = d.a;
        j["max_observed_drift"] = d.max_observed_drift;
        j["max_step_drift"] = d.max_step_drift;
        j["bound"] = d.bound;
        j["violations"] = d.violations;
        j["step_bound_exceedances"] = d.step_bound_exceedances;
        j["escapes"] = d.escapes;
        j["inverse_transform_residual"] = d.inverse_residual;
        if (r.stm) {
            j["stm_max_relative_error"] = r.stm->max_relative_error;
        }
        if (r.scan) {
            j["conjugacy_slope"] = r.scan->slope;
            j["conjugacy_order"] = r.scan_nf ? r.scan_nf->order : 0;
            j["conjugacy_origin_residual"] = r.scan->origin_residual;
        }
        w.json("drift_report.json", "drift_report", j);
    }
    {
        ordered_json j;
        j["program"] = "effstab";
        j["version"] = effstab_version;
        j["config"] = io::config_json(r.cfg);
        ordered_json libs;
        libs["eigen"] = fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
        libs["fmt"] = FMT_VERSION;
        libs["boost"] = BOOST_LIB_VERSION;
        libs["nlohmann_json"] = fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR, NLOHMANN_JSON_VERSION_PATCH);
        j["libraries"] = libs;
        ordered_json units;
        units["distance_km"] = earth_moon_distance_km;
        units["time_unit_days"] = time_unit_days;
        units["sidereal_month_days"] = sidereal_month_days;
        units["note"] = "presentation-only unit table, not taken from the source analysis";
        j["unsourced_unit_constants"] = units;
        j["files"] = w.files();
        j["warnings"] = r.warnings;
        w.json("manifest.json", "manifest", j);
    }
    return w.files();
}

// Full run: compute and write. Returns the process exit code.
inline int run_pipeline(const RunConfig &cfg, std::ostream &log)
{
    try {
        auto r = compute_pipeline(cfg, log);
        detail::run_stage("write_outputs", exit_io, log, r.stage_seconds, [&] { write_outputs(r); });
        log << "[done] outputs in " << cfg.output_dir << '\n';
        return exit_ok;
    } catch (const StageError &e) {
        log << "error: " << e.what() << '\n';
        return e.code();
    } catch (const std::exception &e) {
        log << "error: " << e.what() << '\n';
        return exit_internal;
    }
}

} // namespace effstab
