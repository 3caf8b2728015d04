#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "effstab/cr3bp.hpp"
#include "effstab/errors.hpp"
#include "effstab/generic.hpp"

namespace effstab
{

template <typename R>
struct FlowSettings {
    R abs_tol = default_tol();
    R rel_tol = default_tol();
    int max_order_time = 60;
    R max_step = R(1);
    int direction = 1;
    // Radius at which jet coefficients are measured for step control.
    R jet_norm_radius = R(1e-3);

    static R default_tol()
    {
        return machine_epsilon<R>() / R(2);
    }

    void validate() const
    {
        if (!(abs_tol > 0) || !(rel_tol > 0)) {
            throw std::invalid_argument("FlowSettings: tolerances must be positive");
        }
        if (direction != 1 && direction != -1) {
            throw std::invalid_argument("FlowSettings: direction must be +1 or -1");
        }
        if (max_order_time < 2 || !(max_step > 0)) {
            throw std::invalid_argument("FlowSettings: invalid order cap or maximum step");
        }
    }

    // Fixed time-order policy ceil(-ln(tol) / 2).
    int time_order() const
    {
        using std::ceil;
        using std::log;
        const R tol = std::min(abs_tol, rel_tol);
        const int k = static_cast<int>(ceil(-log(tol) / R(2)));
        return std::clamp(k, 2, max_order_time);
    }
};

// Time-Taylor expansion of one accepted step: state(t0 + tau) = sum_k c_k tau^k.
template <typename T, typename R>
struct StepPolynomial {
    R t0 = R(0);
    R h = R(0);
    std::array<std::vector<T>, 6> series;

    int order() const
    {
        return static_cast<int>(series[0].size()) - 1;
    }

    T eval_component(std::size_t c, const R &tau) const
    {
        const auto &s = series[c];
        T acc = s.back();
        for (int k = order() - 1; k >= 0; --k) {
            acc *= scalar_of<T>(tau);
            acc += s[static_cast<std::size_t>(k)];
        }
        return acc;
    }

    T eval_derivative(std::size_t c, const R &tau) const
    {
        const auto &s = series[c];
        const int K = order();
        T acc = s.back() * scalar_of<T>(R(K));
        for (int k = K - 1; k >= 1; --k) {
            acc *= scalar_of<T>(tau);
            acc += s[static_cast<std::size_t>(k)] * scalar_of<T>(R(k));
        }
        return acc;
    }

    State6<T> eval(const R &tau) const
    {
        State6<T> out;
        for (std::size_t c = 0; c < 6; ++c) {
            out[c] = eval_component(c, tau);
        }
        return out;
    }
};

namespace detail
{

// k-th coefficient of a*a from the series prefix.
template <typename T>
void square_coeff_acc(T &out, const std::vector<T> &a, std::size_t k)
{
    using Sc = scalar_of<T>;
    T half = zero_like(out);
    for (std::size_t j = 0; 2 * j < k; ++j) {
        fma_acc(half, a[j], a[k - j]);
    }
    half *= Sc(2);
    out += half;
    if (k % 2 == 0) {
        fma_acc(out, a[k / 2], a[k / 2]);
    }
}

template <typename T>
void product_coeff_acc(T &out, const std::vector<T> &a, const std::vector<T> &b, std::size_t k)
{
    for (std::size_t j = 0; j <= k; ++j) {
        fma_acc(out, a[j], b[k - j]);
    }
}

} // namespace detail

// Time-Taylor coefficients of the CR3BP flow through order K by the automatic
// differentiation recurrences. The Moon distance uses r2^2 = r1^2 - 2(x+mu) + 1
// and both inverse cubes come from the power-series recurrence for w^(-3/2).
template <typename T, typename R>
std::array<std::vector<T>, 6> taylor_coefficients(const State6<T> &x0, const MassRatio<R> &mu, int K,
                                                  const R &floor = R(default_distance_floor))
{
    using Sc = scalar_of<T>;
    const R m = mu.value();
    const T zero = zero_like(x0[0]);
    std::array<std::vector<T>, 6> X;
    for (std::size_t c = 0; c < 6; ++c) {
        X[c].assign(static_cast<std::size_t>(K) + 1, zero);
        X[c][0] = x0[c];
    }
    const std::size_t n = static_cast<std::size_t>(K) + 1;
    std::vector<T> dx1(n, zero), r1s(n, zero), r2s(n, zero), p1(n, zero), p2(n, zero), P(n, zero);
    T inv_w1 = zero, inv_w2 = zero;
    const R alpha = R(-3) / R(2);

    auto pow_coeff = [&](std::vector<T> &p, const std::vector<T> &w, const T &inv_w0, std::size_t k) {
        T acc = zero;
        for (std::size_t j = 1; j <= k; ++j) {
            const R weight = alpha * R(static_cast<long long>(j)) - R(static_cast<long long>(k - j));
            T wj = w[j] * Sc(weight);
            fma_acc(acc, wj, p[k - j]);
        }
        T pk = zero;
        fma_acc(pk, inv_w0, acc);
        pk *= Sc(R(1) / R(static_cast<long long>(k)));
        p[k] = std::move(pk);
    };

    for (std::size_t k = 0; k < n - 1; ++k) {
        dx1[k] = X[ix][k];
        if (k == 0) {
            dx1[0] += Sc(m);
        }
        detail::square_coeff_acc(r1s[k], dx1, k);
        detail::square_coeff_acc(r1s[k], X[iy], k);
        detail::square_coeff_acc(r1s[k], X[iz], k);
        r2s[k] = r1s[k] - dx1[k] * Sc(2);
        if (k == 0) {
            r2s[0] += Sc(1);
            detail::check_distance(real_part(constant_value(r1s[0])), floor, "the Earth");
            detail::check_distance(real_part(constant_value(r2s[0])), floor, "the Moon");
            p1[0] = gen_pow(r1s[0], alpha);
            p2[0] = gen_pow(r2s[0], alpha);
            inv_w1 = gen_reciprocal(r1s[0]);
            inv_w2 = gen_reciprocal(r2s[0]);
        } else {
            pow_coeff(p1, r1s, inv_w1, k);
            pow_coeff(p2, r2s, inv_w2, k);
        }
        P[k] = p1[k] * Sc(R(1) - m) + p2[k] * Sc(m);

        T ax = X[ivy][k] * Sc(2) + X[ix][k] + p2[k] * Sc(m);
        T dxP = zero;
        detail::product_coeff_acc(dxP, dx1, P, k);
        ax -= dxP;
        T ay = X[iy][k] - X[ivx][k] * Sc(2);
        T yP = zero;
        detail::product_coeff_acc(yP, X[iy], P, k);
        ay -= yP;
        T az = zero;
        detail::product_coeff_acc(az, X[iz], P, k);
        az = -az;

        const Sc inv = Sc(R(1) / R(static_cast<long long>(k + 1)));
        X[ix][k + 1] = X[ivx][k] * inv;
        X[iy][k + 1] = X[ivy][k] * inv;
        X[iz][k + 1] = X[ivz][k] * inv;
        X[ivx][k + 1] = ax * inv;
        X[ivy][k + 1] = ay * inv;
        X[ivz][k + 1] = az * inv;
    }
    return X;
}

// Step size from the last two coefficients: min_k (tol / |c_k|)^(1/k), with
// the usual safety factor exp(-0.7 / (K - 1)).
template <typename T, typename R>
R taylor_step_size(const std::array<std::vector<T>, 6> &X, const FlowSettings<R> &set)
{
    using std::exp;
    using std::pow;
    const int K = static_cast<int>(X[0].size()) - 1;
    R xnorm(0);
    for (const auto &c : X) {
        xnorm = std::max(xnorm, control_norm(c[0], set.jet_norm_radius));
    }
    const R tol = (set.rel_tol * xnorm <= set.abs_tol) ? set.abs_tol : set.rel_tol * xnorm;
    R h = set.max_step;
    for (int k : {K - 1, K}) {
        R nk(0);
        for (const auto &c : X) {
            nk = std::max(nk, control_norm(c[static_cast<std::size_t>(k)], set.jet_norm_radius));
        }
        if (nk > R(0)) {
            h = std::min(h, R(pow(tol / nk, R(1) / R(k))));
        }
    }
    return h * R(exp(R(-0.7) / R(K - 1)));
}

// One adaptive step from time t0. The returned polynomial is valid on
// [0, h] in the direction of integration (tau has the sign of direction).
template <typename T, typename R>
std::pair<StepPolynomial<T, R>, State6<T>> step(const State6<T> &state, const MassRatio<R> &mu, const FlowSettings<R> &set, const R &t0 = R(0),
                                                int order_override = 0)
{
    using std::abs;
    set.validate();
    const int K = order_override > 0 ? order_override : set.time_order();
    StepPolynomial<T, R> sp;
    sp.t0 = t0;
    sp.series = taylor_coefficients(state, mu, K);
    R h = taylor_step_size(sp.series, set);
    if (h < R(100) * machine_epsilon<R>() * abs(t0)) {
        throw IntegrationError("taylor step underflow: a singularity is probably close");
    }
    sp.h = h * R(set.direction);
    State6<T> next = sp.eval(sp.h);
    return {std::move(sp), std::move(next)};
}

// Propagates to t_final, hitting it exactly by truncating the last step.
template <typename T, typename R>
State6<T> flow_to_time(const State6<T> &state, const R &t_final, const MassRatio<R> &mu, FlowSettings<R> set = {})
{
    using std::abs;
    if (t_final == R(0)) {
        return state;
    }
    set.direction = t_final > R(0) ? 1 : -1;
    State6<T> x = state;
    R t(0);
    for (;;) {
        auto [sp, next] = step(x, mu, set, t);
        const R remaining = t_final - t;
        if (abs(sp.h) >= abs(remaining)) {
            return sp.eval(remaining);
        }
        t += sp.h;
        x = std::move(next);
    }
}

} // namespace effstab
