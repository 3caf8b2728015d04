#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "effstab/errors.hpp"
#include "effstab/jet_vector.hpp"
#include "effstab/normal_form.hpp"

namespace effstab
{

// Presentation units for the Earth-Moon system. They are not part of the
// estimates; every theorem below counts map iterations.
inline constexpr double earth_moon_distance_km = 384400.0;
inline constexpr double sidereal_month_days = 27.321661;
inline constexpr double time_unit_days = sidereal_month_days / (2 * std::numbers::pi);
inline constexpr double days_per_year = 365.25;

struct RhoSeries {
    // rho_k for k = 1..k_max, NaN where the slice vanishes.
    std::vector<double> rho_k;
    std::vector<double> running_min;  // over k in [2, k], NaN for k = 1
    double rho = 0;
};

// rho_k = ||G^k||_1^(-1/k) at radius 1 (max over components); rho is the
// minimum over k in [2, k_max], skipping vanishing slices.
template <typename S>
RhoSeries rho_root_test(const JetVector<S> &G, int k_max)
{
    if (k_max < 2 || k_max > G.order()) {
        throw std::invalid_argument("rho_root_test: k_max must lie in [2, order]");
    }
    RhoSeries out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double running = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= k_max; ++k) {
        const double n = static_cast<double>(slice_norm(G, k, real_t<S>(1)));
        const double r = n > 0 ? std::pow(n, -1.0 / k) : nan;
        out.rho_k.push_back(r);
        if (k >= 2 && n > 0) {
            running = std::min(running, r);
        }
        out.running_min.push_back(k >= 2 && std::isfinite(running) ? running : nan);
    }
    if (!std::isfinite(running)) {
        throw EstimateError("rho_root_test: every slice of degree >= 2 vanishes");
    }
    out.rho = running;
    return out;
}

inline double linear_penalty(int N, double tau, double gamma)
{
    return std::pow(static_cast<double>(N), tau) / gamma;
}

inline double quadratic_penalty(int N, double tau, double rho, double gamma)
{
    const double n = static_cast<double>(N);
    return 2 * std::pow(n, tau + 1) / (rho * gamma) + 8 * std::pow(n, 2 * tau + 1) / (rho * gamma * gamma);
}

// Saturated value of eps2 <= L / (Q (1 + 2L)^(N-2)).
inline double epsilon2(double L, double Q, int N)
{
    if (N < 2 || !(L > 0) || !(Q > 0)) {
        throw std::invalid_argument("epsilon2: need N >= 2 and L, Q > 0");
    }
    return L / (Q * std::pow(1 + 2 * L, N - 2));
}

inline double threshold_radius(double A, double tau)
{
    return 1.0 / (A * std::pow(2 * std::numbers::e, tau));
}

// floor((1/e) (1/(A a))^(1/tau)). At a = a0 the argument is 2 up to rounding,
// so a few ulps of slack keep the boundary case at 2.
inline int n_opt(double a, double A, double tau)
{
    const double a0 = threshold_radius(A, tau);
    if (!(a > 0) || a > a0 * (1 + 1e-12)) {
        throw EstimateError("n_opt: radius " + to_decimal(a) + " above the threshold a0 = " + to_decimal(a0));
    }
    const double x = std::pow(1.0 / (A * a), 1.0 / tau) / std::numbers::e;
    const double n = std::floor(x * (1 + 64 * std::numeric_limits<double>::epsilon()));
    if (n > static_cast<double>(std::numeric_limits<int>::max())) {
        return std::numeric_limits<int>::max();
    }
    return std::max(2, static_cast<int>(n));
}

// C exp(tau N_opt(a)) iterations.
inline double t_eff(double a, double A, double C, double tau)
{
    return C * std::exp(tau * n_opt(a, A, tau));
}

// Long-time radius for T >= C; below C the threshold radius a0. For
// C <= T < C e^tau the formula exceeds a0, where it no longer applies; a0 is
// used instead, which is still valid because T_eff(a0) = C e^(2 tau) > T.
inline double confinement_radius(double T, double A, double C, double tau)
{
    if (!(T > 0)) {
        throw std::invalid_argument("confinement_radius: T must be positive");
    }
    const double a0 = threshold_radius(A, tau);
    if (T < C) {
        return a0;
    }
    const double f = 1 + std::log(T / C) / tau;
    return std::min(a0, 1.0 / (A * std::exp(tau) * std::pow(f, tau)));
}

// eps_opt = eps2 (2a/rho) exp(-tau N_opt), the per-iteration radial drift bound.
inline double drift_bound(double eps2, double a, double rho, double tau, int N_opt)
{
    return eps2 * (2 * a / rho) * std::exp(-tau * N_opt);
}

struct OrderRow {
    int k = 0;
    double rho_k = 0;
    double rho_min = 0;
    double gamma_k = 0;
    double gamma_min = 0;
    double L = 0;
    double Q = 0;
    double eps2 = 0;
    double A = 0;
    double C = 0;
    int N_opt = 0;
    double a0 = 0;
};

struct MissionEstimate {
    double years = 0;
    long long iterations = 0;
    bool below_C = true;  // T < C: threshold branch
    double a = 0;
    int N_opt = 0;
    bool n_opt_clamped = false;
    double T_eff = 0;
    double eps_opt = 0;
};

struct StabilityConstants {
    double tau = 2;
    int N = 0;
    RhoSeries rho_series;
    double rho = 0;
    double gamma = 0;
    double L = 0;
    double Q = 0;
    double eps2 = 0;
    double A = 0;
    double C = 0;
    double a0 = 0;
    std::vector<OrderRow> per_order;
    std::vector<MissionEstimate> missions;
};

inline long long mission_iterations(double years, double revolution_days)
{
    return std::llround(years * days_per_year / revolution_days);
}

// N_opt at radius a, clamped to the computed order N when the formula asks
// for more (the flag records it).
inline std::pair<int, bool> clamped_n_opt(double a, double A, double tau, int N)
{
    const int n = n_opt(a, A, tau);
    return {std::min(n, N), n > N};
}

inline MissionEstimate mission_estimate(const StabilityConstants &sc, double years, double revolution_days)
{
    MissionEstimate m;
    m.years = years;
    m.iterations = mission_iterations(years, revolution_days);
    const double T = static_cast<double>(m.iterations);
    m.below_C = T < sc.C;
    m.a = confinement_radius(T, sc.A, sc.C, sc.tau);
    std::tie(m.N_opt, m.n_opt_clamped) = clamped_n_opt(m.a, sc.A, sc.tau, sc.N);
    m.T_eff = sc.C * std::exp(sc.tau * m.N_opt);
    m.eps_opt = drift_bound(sc.eps2, m.a, sc.rho, sc.tau, m.N_opt);
    return m;
}

// The full chain at order N from the map jet and the divisor rows (k = 1..N).
template <typename S>
StabilityConstants stability_constants(const JetVector<S> &G, const std::vector<DivisorRecord> &divisors, int N, double tau,
                                       const std::vector<double> &mission_years = {}, double revolution_days = 10.0)
{
    if (N < 2 || static_cast<int>(divisors.size()) < N) {
        throw std::invalid_argument("stability_constants: need N >= 2 and divisor rows 1..N");
    }
    StabilityConstants sc;
    sc.tau = tau;
    sc.N = N;
    sc.rho_series = rho_root_test(G, N);
    sc.rho = sc.rho_series.rho;
    sc.gamma = divisors[static_cast<std::size_t>(N - 1)].gamma_running;
    if (!(sc.rho > 0) || !(sc.gamma > 0)) {
        throw EstimateError("stability_constants: rho and gamma must be positive");
    }
    sc.L = linear_penalty(N, tau, sc.gamma);
    sc.Q = quadratic_penalty(N, tau, sc.rho, sc.gamma);
    sc.eps2 = epsilon2(sc.L, sc.Q, N);
    sc.A = 4 / (sc.rho * sc.gamma);
    sc.C = sc.rho / (4 * sc.eps2);
    sc.a0 = threshold_radius(sc.A, tau);
    if (!(sc.eps2 > 0) || !(sc.C > 0) || !std::isfinite(sc.C)) {
        throw EstimateError("stability_constants: eps2 underflowed or C is not finite");
    }

    for (int k = 2; k <= N; ++k) {
        const auto uk = static_cast<std::size_t>(k - 1);
        OrderRow r;
        r.k = k;
        r.rho_k = sc.rho_series.rho_k[uk];
        r.rho_min = sc.rho_series.running_min[uk];
        r.gamma_k = divisors[uk].gamma_k;
        r.gamma_min = divisors[uk].gamma_running;
        r.L = linear_penalty(k, tau, r.gamma_min);
        r.Q = quadratic_penalty(k, tau, r.rho_min, r.gamma_min);
        r.eps2 = epsilon2(r.L, r.Q, k);
        r.A = 4 / (r.rho_min * r.gamma_min);
        r.C = r.rho_min / (4 * r.eps2);
        r.a0 = threshold_radius(r.A, tau);
        r.N_opt = std::min(n_opt(r.a0, r.A, tau), k);
        sc.per_order.push_back(r);
    }
    for (double y : mission_years) {
        sc.missions.push_back(mission_estimate(sc, y, revolution_days));
    }
    return sc;
}

} // namespace effstab
