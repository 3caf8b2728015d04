#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "effstab/normal_form.hpp"
#include "effstab/section.hpp"

namespace effstab
{

// A point in normal-form coordinates given by its two radii and phases.
inline std::array<cplx, 4> nf_point(double r1, double th1, double r2, double th2)
{
    const cplx z1 = std::polar(r1, th1), z3 = std::polar(r2, th2);
    return {z1, std::conj(z1), z3, std::conj(z3)};
}

inline std::array<double, 2> nf_radii(const std::array<cplx, 4> &z)
{
    return {std::abs(z[0]), std::abs(z[2])};
}

// Section point u0 + s for a normal-form point z.
inline SectionCoords<double> nf_to_section_point(const NormalForm &nf, const FixedPoint<double> &fp, const std::array<cplx, 4> &z)
{
    const auto s = nf_to_section(nf, z);
    SectionCoords<double> u;
    for (std::size_t i = 0; i < 4; ++i) {
        u[i] = fp.u0[i] + s[i];
    }
    return u;
}

inline std::array<cplx, 4> section_point_to_nf(const NormalForm &nf, const FixedPoint<double> &fp, const SectionCoords<double> &u)
{
    std::array<double, 4> s;
    for (std::size_t i = 0; i < 4; ++i) {
        s[i] = u[i] - fp.u0[i];
    }
    return section_to_nf(nf, s);
}

// Size of compose(c, c^-1) - id at radius r (max over components). The raw
// coefficients of high degree are huge, so only a radius gives a useful scale.
inline double inverse_transform_residual(const NormalForm &nf, double r)
{
    const auto d = compose(nf.transform, nf.inverse) - JetVector<cplx>::identity(4, nf.order);
    return norm_at_radius(d, r);
}

struct DriftSample {
    std::array<double, 2> r0{};
    std::array<double, 2> max_cumulative{};
    std::array<double, 2> max_step{};
    bool escaped = false;
    int completed = 0;
};

struct DriftReport {
    int samples = 0;
    int iterations = 0;
    double a = 0;
    std::array<double, 2> max_observed_drift{};       // cumulative |r_i(k) - r_i(0)|
    std::array<double, 2> max_step_drift{};           // per-iteration |r_i(k+1) - r_i(k)|
    double bound = 0;                                 // eps_opt
    int violations = 0;                               // cumulative drift >= a/2
    int step_bound_exceedances = 0;                   // per-iteration drift > eps_opt
    int escapes = 0;
    double inverse_residual = 0;
    std::vector<DriftSample> per_sample;
};

// Half of the samples sit on the circles |z_i| = a/2 with random phases, the
// other half at radii uniform in [0, a/2].
inline std::vector<std::array<double, 4>> drift_sample_points(double a, int n_samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::array<double, 4>> pts;
    for (int s = 0; s < n_samples; ++s) {
        const bool boundary = s < (n_samples + 1) / 2;
        const double r1 = boundary ? a / 2 : unit(rng) * a / 2;
        const double r2 = boundary ? a / 2 : unit(rng) * a / 2;
        const double t1 = phase(rng), t2 = phase(rng);
        pts.push_back({r1, t1, r2, t2});
    }
    return pts;
}

// Iterates the integrated Poincare map from normal-form samples of radius
// <= a/2 and tracks the normal-form radii at each crossing.
inline DriftReport monte_carlo_drift(const FixedPoint<double> &fp, const NormalForm &nf, double a, int n_samples, int n_iterations,
                                     const MassRatio<double> &mu, double eps_opt, std::uint64_t seed = 20240101,
                                     const SectionSettings<double> &set = {})
{
    DriftReport rep;
    rep.samples = n_samples;
    rep.iterations = n_iterations;
    rep.a = a;
    rep.bound = eps_opt;
    rep.inverse_residual = inverse_transform_residual(nf, a);
    for (const auto &p : drift_sample_points(a, n_samples, seed)) {
        DriftSample ds;
        ds.r0 = {p[0], p[2]};
        auto u = nf_to_section_point(nf, fp, nf_point(p[0], p[1], p[2], p[3]));
        // Radii as seen through the stored inverse, so that pull-back error
        // does not show up as drift at k = 0.
        const auto start = nf_radii(section_point_to_nf(nf, fp, u));
        auto prev = start;
        try {
            for (int k = 0; k < n_iterations; ++k) {
                u = return_map(u, fp.jacobi, mu, set).first;
                const auto r = nf_radii(section_point_to_nf(nf, fp, u));
                for (std::size_t l = 0; l < 2; ++l) {
                    const double step = std::abs(r[l] - prev[l]);
                    ds.max_step[l] = std::max(ds.max_step[l], step);
                    if (step > eps_opt) {
                        ++rep.step_bound_exceedances;
                    }
                    ds.max_cumulative[l] = std::max(ds.max_cumulative[l], std::abs(r[l] - start[l]));
                }
                prev = r;
                ++ds.completed;
            }
        } catch (const Error &) {
            ds.escaped = true;
            ++rep.escapes;
        }
        for (std::size_t l = 0; l < 2; ++l) {
            rep.max_observed_drift[l] = std::max(rep.max_observed_drift[l], ds.max_cumulative[l]);
            rep.max_step_drift[l] = std::max(rep.max_step_drift[l], ds.max_step[l]);
        }
        if (std::max(ds.max_cumulative[0], ds.max_cumulative[1]) >= a / 2) {
            ++rep.violations;
        }
        rep.per_sample.push_back(ds);
    }
    return rep;
}

struct ResidualScan {
    std::vector<double> radii;
    std::vector<double> max_residual;
    double slope = 0;
    double origin_residual = 0;
};

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double> &x, const std::vector<double> &y)
{
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) {
        throw std::invalid_argument("loglog_slope: need at least two points");
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

inline double conjugacy_residual_at(const FixedPoint<double> &fp, const NormalForm &nf, const MassRatio<double> &mu,
                                    const std::array<cplx, 4> &z, const SectionSettings<double> &set)
{
    const auto u = nf_to_section_point(nf, fp, z);
    const auto image = return_map(u, fp.jacobi, mu, set).first;
    const auto lhs = section_point_to_nf(nf, fp, image);
    const auto rhs = eval(nf.F, std::vector<cplx>(z.begin(), z.end()));
    double m = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        m = std::max(m, std::abs(lhs[i] - rhs[i]));
    }
    return m;
}

// |c^-1(G(c(z))) - F(z)| with the integrated map in the middle, sampled on
// |z_1| = |z_3| = r with random phases.
inline ResidualScan conjugacy_residual_scan(const FixedPoint<double> &fp, const NormalForm &nf, const MassRatio<double> &mu,
                                            const std::vector<double> &radii, int n_samples, std::uint64_t seed = 7,
                                            const SectionSettings<double> &set = {})
{
    ResidualScan out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
    out.origin_residual = conjugacy_residual_at(fp, nf, mu, {}, set);
    for (double r : radii) {
        double m = 0;
        for (int s = 0; s < n_samples; ++s) {
            const double t1 = phase(rng), t2 = phase(rng);
            m = std::max(m, conjugacy_residual_at(fp, nf, mu, nf_point(r, t1, r, t2), set));
        }
        out.radii.push_back(r);
        out.max_residual.push_back(m);
    }
    out.slope = loglog_slope(out.radii, out.max_residual);
    return out;
}

inline std::vector<double> log_spaced(double lo, double hi, int n)
{
    std::vector<double> v;
    for (int i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        v.push_back(lo * std::pow(hi / lo, t));
    }
    return v;
}

struct StmCheck {
    std::array<std::array<double, 4>, 4> jet{};
    std::array<std::array<double, 4>, 4> finite_difference{};
    double max_relative_error = 0;
};

// Columns of G^1 against central differences of the scalar map with step h;
// the error of each column is relative to that column's largest entry.
inline StmCheck stm_finite_difference_check(const FixedPoint<double> &fp, const MassRatio<double> &mu, double h = 1e-6,
                                            const SectionSettings<double> &set = {})
{
    StmCheck out;
    out.jet = linear_part(poincare_map_jet(fp, mu, 1, set).G);
    for (std::size_t j = 0; j < 4; ++j) {
        auto up = fp.u0, dn = fp.u0;
        up[j] += h;
        dn[j] -= h;
        const auto Pu = return_map(up, fp.jacobi, mu, set).first;
        const auto Pd = return_map(dn, fp.jacobi, mu, set).first;
        double colmax = 0, err = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            out.finite_difference[i][j] = (Pu[i] - Pd[i]) / (2 * h);
            colmax = std::max(colmax, std::abs(out.jet[i][j]));
            err = std::max(err, std::abs(out.finite_difference[i][j] - out.jet[i][j]));
        }
        out.max_relative_error = std::max(out.max_relative_error, err / colmax);
    }
    return out;
}

} // namespace effstab
