#pragma once

#include <cmath>
#include <type_traits>

#include "effstab/jet.hpp"

// Small adapters that let the dynamics and integrator code run unchanged on
// plain scalars and on jets.

namespace effstab
{

template <typename T>
struct value_traits {
    using scalar = T;
    static const T &constant(const T &x)
    {
        return x;
    }
    static T zero_like(const T &)
    {
        return T(0);
    }
};

template <typename S>
struct value_traits<Jet<S>> {
    using scalar = S;
    static const S &constant(const Jet<S> &x)
    {
        return x.constant_term();
    }
    static Jet<S> zero_like(const Jet<S> &ref)
    {
        return Jet<S>(ref.table_ptr());
    }
};

template <typename T>
using scalar_of = typename value_traits<T>::scalar;

template <typename T>
const scalar_of<T> &constant_value(const T &x)
{
    return value_traits<T>::constant(x);
}

template <typename T>
T zero_like(const T &ref)
{
    return value_traits<T>::zero_like(ref);
}

template <typename T>
inline constexpr bool is_jet_v = !std::is_same_v<scalar_of<T>, T>;

// out += a * b without a temporary when T is a jet.
template <typename T>
void fma_acc(T &out, const T &a, const T &b)
{
    if constexpr (is_jet_v<T>) {
        mul_acc(out, a, b);
    } else {
        out += a * b;
    }
}

template <typename T>
T gen_pow(const T &x, const real_t<scalar_of<T>> &alpha)
{
    using std::pow;
    if constexpr (is_jet_v<T>) {
        return effstab::pow(x, alpha);
    } else {
        return pow(x, alpha);
    }
}

template <typename T>
T gen_sqrt(const T &x)
{
    using std::sqrt;
    if constexpr (is_jet_v<T>) {
        return effstab::sqrt(x);
    } else {
        return sqrt(x);
    }
}

template <typename T>
T gen_reciprocal(const T &x)
{
    if constexpr (is_jet_v<T>) {
        return effstab::reciprocal(x);
    } else {
        return scalar_of<T>(1) / x;
    }
}

// Magnitude used for step control: |x| for scalars, the weighted 1-norm at the
// given radius for jets.
template <typename T>
real_t<scalar_of<T>> control_norm(const T &x, const real_t<scalar_of<T>> &rho)
{
    if constexpr (is_jet_v<T>) {
        return norm_at_radius(x, rho);
    } else {
        return magnitude(x);
    }
}

} // namespace effstab
