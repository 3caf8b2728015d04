#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "effstab/cr3bp.hpp"
#include "effstab/errors.hpp"
#include "effstab/jet_vector.hpp"
#include "effstab/taylor_flow.hpp"

namespace effstab
{

// Section coordinates on {y = 0, vy < 0}: u = (x, z, vx, vz).
template <typename T>
using SectionCoords = std::array<T, 4>;

inline constexpr std::array<std::size_t, 4> section_components{ix, iz, ivx, ivz};

template <typename R>
struct FixedPoint {
    SectionCoords<R> u0{};
    R period{};
    R jacobi{};
    R residual{};
    int iterations = 0;
};

template <typename R>
struct PoincareMapJet {
    JetVector<R> G;  // P(u0 + s) - u0
    Jet<R> T;        // crossing time
    FixedPoint<R> center;
    R mu{};
};

template <typename T, typename R>
State6<T> lift_to_state(const SectionCoords<T> &u, const R &C, const MassRatio<R> &mu)
{
    State6<T> s;
    s[ix] = u[0];
    s[iy] = zero_like(u[0]);
    s[iz] = u[1];
    s[ivx] = u[2];
    s[ivz] = u[3];
    s[ivy] = vy_from_jacobi(u[0], u[1], u[2], u[3], C, mu, -1);
    return s;
}

template <typename T>
SectionCoords<T> project_to_section(const State6<T> &s)
{
    return {s[ix], s[iz], s[ivx], s[ivz]};
}

template <typename R>
struct SectionSettings {
    FlowSettings<R> flow{};
    // Give up if no return happened within this time.
    R max_time = R(50);
    // |vy| at the crossing must exceed this for the crossing to count as transversal.
    R min_transversal_speed = R(1e-8);
};

// Root of the constant-term y series of one step, tau in [0, h], by Newton
// safeguarded with bisection; converges to 1e2 ulp in time.
template <typename T, typename R>
R locate_crossing(const StepPolynomial<T, R> &sp)
{
    using std::abs;
    const int K = sp.order();
    std::vector<R> y(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) {
        y[static_cast<std::size_t>(k)] = real_part(constant_value(sp.series[iy][static_cast<std::size_t>(k)]));
    }
    auto Y = [&](const R &tau, R &dY) {
        R v = y.back();
        dY = R(0);
        for (int k = K - 1; k >= 0; --k) {
            dY = dY * tau + v;
            v = v * tau + y[static_cast<std::size_t>(k)];
        }
        return v;
    };
    R lo(0), hi = sp.h;  // Y(lo) > 0 >= Y(hi), h may be negative
    R d;
    const R ylo = Y(lo, d), yhi = Y(hi, d);
    R tau = (ylo == yhi) ? hi : lo + (hi - lo) * ylo / (ylo - yhi);
    const R tol = R(100) * machine_epsilon<R>() * std::max(R(1), abs(sp.t0 + sp.h));
    for (int it = 0; it < 200; ++it) {
        R dY;
        const R v = Y(tau, dY);
        if (v > 0) {
            lo = tau;
        } else {
            hi = tau;
        }
        R next = (dY != R(0)) ? tau - v / dY : (lo + hi) / R(2);
        const bool inside = (sp.h > 0) ? (next >= std::min(lo, hi) && next <= std::max(lo, hi))
                                       : (next <= std::max(lo, hi) && next >= std::min(lo, hi));
        if (!inside) {
            next = (lo + hi) / R(2);
        }
        const R delta = abs(next - tau);
        tau = next;
        if (delta <= tol || abs(hi - lo) <= tol) {
            break;
        }
    }
    return tau;
}

template <typename T, typename R>
struct CrossingResult {
    R time{};                  // t* (scalar root for the constant terms)
    State6<T> state{};         // flow at t*
    int steps = 0;
};

// Integrates from a state on the section until the next crossing of
// {y = 0, vy < 0}, i.e. a sign change of y from + to -.
template <typename T, typename R>
CrossingResult<T, R> integrate_to_section(const State6<T> &start, const MassRatio<R> &mu, const SectionSettings<R> &set)
{
    State6<T> x = start;
    R t(0);
    int steps = 0;
    while (t < set.max_time) {
        auto [sp, next] = step(x, mu, set.flow, t);
        ++steps;
        const R y0 = real_part(constant_value(x[iy]));
        const R y1 = real_part(constant_value(next[iy]));
        if (y0 > R(0) && y1 <= R(0)) {
            const R tau = locate_crossing(sp);
            State6<T> at = sp.eval(tau);
            const R vy = real_part(constant_value(at[ivy]));
            if (!(vy < -set.min_transversal_speed)) {
                throw IntegrationError("section crossing is not transversal (vy >= 0 at y = 0)");
            }
            return {t + tau, std::move(at), steps};
        }
        t += sp.h;
        x = std::move(next);
    }
    throw IntegrationError("no return to the section within the time limit");
}

namespace detail
{

// Horner evaluation of a time series at a jet-valued time offset.
template <typename S>
Jet<S> eval_series_at_jet(const std::vector<Jet<S>> &c, const Jet<S> &delta)
{
    Jet<S> acc = c.back();
    for (int k = static_cast<int>(c.size()) - 2; k >= 0; --k) {
        acc = acc * delta;
        acc += c[static_cast<std::size_t>(k)];
    }
    return acc;
}

template <typename S>
Jet<S> eval_series_derivative_at_jet(const std::vector<Jet<S>> &c, const Jet<S> &delta)
{
    const int K = static_cast<int>(c.size()) - 1;
    Jet<S> acc = c.back() * S(K);
    for (int k = K - 1; k >= 1; --k) {
        acc = acc * delta;
        acc.axpy(S(k), c[static_cast<std::size_t>(k)]);
    }
    return acc;
}

} // namespace detail

// Crossing-time correction delta(s) with y(t* + delta(s), s) = 0, solved by
// Newton iteration in jet arithmetic on the time series taken at t*. The series
// has time order >= N + 1, and delta has no constant term, so the solve has no
// truncation error in s.
template <typename S>
Jet<S> crossing_time_jet(const std::vector<Jet<S>> &y_series)
{
    const auto &tab = y_series.front().table_ptr();
    Jet<S> delta(tab);
    const int N = y_series.front().order();
    // Each Newton pass at least doubles the number of correct degrees.
    int passes = 2;
    for (int d = 1; d < N + 1; d *= 2) {
        ++passes;
    }
    for (int it = 0; it < passes; ++it) {
        Jet<S> Y = detail::eval_series_at_jet(y_series, delta);
        Jet<S> dY = detail::eval_series_derivative_at_jet(y_series, delta);
        if (magnitude(dY.constant_term()) == 0) {
            throw IntegrationError("crossing_time_jet: tangential crossing");
        }
        Jet<S> corr = Y / dY;
        corr[0] = S(0);
        delta -= corr;
    }
    return delta;
}

// Return map expanded around a section point: P(center + s) as jets of the
// given order (the constant terms hold P(center)), and the crossing time T(s).
template <typename R>
std::pair<JetVector<R>, Jet<R>> return_map_expansion(const SectionCoords<R> &center, const R &C, const MassRatio<R> &mu, int order,
                                                     const SectionSettings<R> &set)
{
    SectionCoords<Jet<R>> u;
    for (int i = 0; i < 4; ++i) {
        u[static_cast<std::size_t>(i)] = Jet<R>::variable(i, 4, order) + center[static_cast<std::size_t>(i)];
    }
    const State6<Jet<R>> start = lift_to_state(u, C, mu);
    const auto cross = integrate_to_section(start, mu, set);

    const int K = std::max(set.flow.time_order(), order + 1);
    const auto X = taylor_coefficients(cross.state, mu, K);
    const Jet<R> delta = crossing_time_jet(X[iy]);

    std::vector<Jet<R>> comps;
    for (std::size_t c : section_components) {
        comps.push_back(detail::eval_series_at_jet(X[c], delta));
    }
    Jet<R> T = delta;
    T[0] += cross.time;
    return {JetVector<R>(std::move(comps)), std::move(T)};
}

// Scalar return map P(u) and its return time.
template <typename R>
std::pair<SectionCoords<R>, R> return_map(const SectionCoords<R> &u, const R &C, const MassRatio<R> &mu, const SectionSettings<R> &set)
{
    const auto cross = integrate_to_section(lift_to_state(u, C, mu), mu, set);
    return {project_to_section(cross.state), cross.time};
}

namespace detail
{

// Dense Gaussian elimination with partial pivoting; works for any real field.
template <typename R, std::size_t n>
std::array<R, n> solve_linear(std::array<std::array<R, n>, n> A, std::array<R, n> b)
{
    using std::abs;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (abs(A[r][c]) > abs(A[piv][c])) {
                piv = r;
            }
        }
        if (A[piv][c] == R(0)) {
            throw NewtonError("singular Newton matrix");
        }
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const R f = A[r][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k) {
                A[r][k] -= f * A[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    std::array<R, n> x{};
    for (std::size_t c = n; c-- > 0;) {
        R s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) {
            s -= A[c][k] * x[k];
        }
        x[c] = s / A[c][c];
    }
    return x;
}

} // namespace detail

// Newton iteration on u -> P(u) - u at fixed Jacobi constant, Jacobian from an
// order-1 jet pass. Stops as soon as the residual is below newton_tol.
template <typename R>
FixedPoint<R> refine_fixed_point(const SectionCoords<R> &seed, const R &C, const MassRatio<R> &mu, const R &newton_tol,
                                 const SectionSettings<R> &set = {}, int max_iterations = 25)
{
    using std::abs;
    FixedPoint<R> fp;
    fp.u0 = seed;
    fp.jacobi = C;
    for (int it = 0; it <= max_iterations; ++it) {
        const auto [P, T] = return_map_expansion(fp.u0, C, mu, 1, set);
        std::array<R, 4> F{};
        R res(0);
        for (std::size_t i = 0; i < 4; ++i) {
            F[i] = P[i].constant_term() - fp.u0[i];
            res = std::max(res, R(abs(F[i])));
        }
        fp.residual = res;
        fp.period = T.constant_term();
        if (res < newton_tol) {
            fp.iterations = it;
            return fp;
        }
        if (it == max_iterations) {
            break;
        }
        std::array<std::array<R, 4>, 4> J{};
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                J[i][j] = P[i][j + 1] - (i == j ? R(1) : R(0));
            }
            F[i] = -F[i];
        }
        const auto du = detail::solve_linear(J, F);
        for (std::size_t i = 0; i < 4; ++i) {
            fp.u0[i] += du[i];
        }
    }
    throw NewtonError("fixed point Newton did not converge in " + std::to_string(max_iterations) + " iterations (residual " +
                      to_decimal(fp.residual) + ")");
}

// Jet of the return map centred on a converged fixed point: G(s) = P(u0 + s) - u0.
template <typename R>
PoincareMapJet<R> poincare_map_jet(const FixedPoint<R> &fp, const MassRatio<R> &mu, int order, const SectionSettings<R> &set = {})
{
    auto [P, T] = return_map_expansion(fp.u0, fp.jacobi, mu, order, set);
    for (std::size_t i = 0; i < 4; ++i) {
        P[i][0] -= fp.u0[i];
    }
    return {std::move(P), std::move(T), fp, mu.value()};
}

// Linear part of a map jet as a row-major 4x4 matrix.
template <typename R>
std::array<std::array<R, 4>, 4> linear_part(const JetVector<R> &G)
{
    std::array<std::array<R, 4>, 4> M{};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            M[i][j] = G[i][j + 1];
        }
    }
    return M;
}

} // namespace effstab
