#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "effstab/errors.hpp"
#include "effstab/generic.hpp"

namespace effstab
{

// Earth-Moon mass ratio used throughout the numerical application.
inline constexpr double earth_moon_mu = 0.01215058560962404;

template <typename R>
class MassRatio
{
public:
    MassRatio() = default;
    explicit MassRatio(R mu) : mu_(mu)
    {
        if (!(mu > R(0) && mu < R(0.5))) {
            throw std::invalid_argument("MassRatio: mu must lie in (0, 1/2)");
        }
    }
    const R &value() const
    {
        return mu_;
    }
    operator const R &() const
    {
        return mu_;
    }

private:
    R mu_ = R(earth_moon_mu);
};

// Synodic state (x, y, z, vx, vy, vz); T is a scalar or a jet.
template <typename T>
using State6 = std::array<T, 6>;

enum StateIndex : std::size_t { ix = 0, iy = 1, iz = 2, ivx = 3, ivy = 4, ivz = 5 };

// Default collision floor on r1, r2 (nondimensional).
inline constexpr double default_distance_floor = 1e-6;

namespace detail
{

template <typename R>
void check_distance(const R &r2, const R &floor, const char *which)
{
    if (!(r2 > floor * floor)) {
        throw SingularityError(std::string("cr3bp: distance to ") + which + " below the collision floor");
    }
}

} // namespace detail

// Squared distances to the Earth (at -mu) and the Moon (at 1 - mu).
template <typename T, typename R>
std::pair<T, T> primary_distances_sq(const T &x, const T &y, const T &z, const R &mu)
{
    const T dx1 = x + scalar_of<T>(mu);
    const T yz = y * y + z * z;
    T r1s = dx1 * dx1 + yz;
    T r2s = r1s - scalar_of<T>(2) * dx1 + scalar_of<T>(1);
    return {std::move(r1s), std::move(r2s)};
}

// Effective potential U = (x^2 + y^2)/2 + (1 - mu)/r1 + mu/r2.
template <typename T, typename R>
T effective_potential(const T &x, const T &y, const T &z, const MassRatio<R> &mu, const R &floor = R(default_distance_floor))
{
    const R m = mu.value();
    const auto [r1s, r2s] = primary_distances_sq(x, y, z, m);
    detail::check_distance(real_part(constant_value(r1s)), floor, "the Earth");
    detail::check_distance(real_part(constant_value(r2s)), floor, "the Moon");
    const R half = R(1) / R(2);
    return scalar_of<T>(half) * (x * x + y * y) + scalar_of<T>(R(1) - m) * gen_pow(r1s, -half) + scalar_of<T>(m) * gen_pow(r2s, -half);
}

// Equations of motion: x'' - 2y' = U_x, y'' + 2x' = U_y, z'' = U_z.
template <typename T, typename R>
State6<T> vector_field(const State6<T> &s, const MassRatio<R> &mu, const R &floor = R(default_distance_floor))
{
    using Sc = scalar_of<T>;
    const R m = mu.value();
    const auto &[x, y, z, vx, vy, vz] = s;
    const auto [r1s, r2s] = primary_distances_sq(x, y, z, m);
    detail::check_distance(real_part(constant_value(r1s)), floor, "the Earth");
    detail::check_distance(real_part(constant_value(r2s)), floor, "the Moon");
    const R three_halves = R(3) / R(2);
    const T p1 = gen_pow(r1s, -three_halves);
    const T p2 = gen_pow(r2s, -three_halves);
    // P = (1-mu)/r1^3 + mu/r2^3; the Moon term splits as -mu (x+mu) p2 + mu p2.
    const T P = Sc(R(1) - m) * p1 + Sc(m) * p2;
    const T dx1 = x + Sc(m);
    State6<T> d{vx, vy, vz, x, y, z};
    d[ivx] = Sc(2) * vy + x - dx1 * P + Sc(m) * p2;
    d[ivy] = y - Sc(2) * vx - y * P;
    d[ivz] = -(z * P);
    return d;
}

// Jacobi constant C = 2U - |v|^2.
template <typename T, typename R>
T jacobi_constant(const State6<T> &s, const MassRatio<R> &mu)
{
    const T U = effective_potential(s[ix], s[iy], s[iz], mu);
    return scalar_of<T>(2) * U - (s[ivx] * s[ivx] + s[ivy] * s[ivy] + s[ivz] * s[ivz]);
}

// vy on the plane y = 0 recovered from the Jacobi constant.
template <typename T, typename R>
T vy_from_jacobi(const T &x, const T &z, const T &vx, const T &vz, const R &C, const MassRatio<R> &mu, int sign)
{
    if (sign != 1 && sign != -1) {
        throw std::invalid_argument("vy_from_jacobi: sign must be +1 or -1");
    }
    const T y = zero_like(x);
    const T U = effective_potential(x, y, z, mu);
    T rad = scalar_of<T>(2) * U - vx * vx - vz * vz - scalar_of<T>(C);
    const auto r0 = real_part(constant_value(rad));
    if constexpr (is_jet_v<T>) {
        if (!(r0 > R(0))) {
            throw DomainError("vy_from_jacobi: radicand not positive, state lies off the energy surface");
        }
    } else {
        if (r0 < R(0)) {
            throw DomainError("vy_from_jacobi: negative radicand, state lies off the energy surface");
        }
        if (r0 == R(0)) {
            return T(0);
        }
    }
    T v = gen_sqrt(rad);
    if (sign < 0) {
        v = -v;
    }
    return v;
}

// x coordinate of the L2 point (beyond the Moon) from the collinear quintic,
// found by bisection on U_x(x, 0, 0) = 0.
template <typename R>
R l2_position(const MassRatio<R> &mu)
{
    const R m = mu.value();
    auto ux = [m](R x) {
        using std::abs;
        const R d1 = x + m, d2 = x - R(1) + m;
        return x - (R(1) - m) * d1 / (abs(d1) * d1 * d1) - m * d2 / (abs(d2) * d2 * d2);
    };
    R lo = R(1) - m + R(1e-6), hi = R(2);
    for (int i = 0; i < 400 && hi - lo > machine_epsilon<R>() * hi; ++i) {
        const R mid = (lo + hi) / R(2);
        if ((ux(lo) < R(0)) == (ux(mid) < R(0))) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return (lo + hi) / R(2);
}

} // namespace effstab
