#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <type_traits>

#include <boost/multiprecision/float128.hpp>
#include <fmt/format.h>

namespace effstab
{

// Extended precision scalar: IEEE binary128 (113-bit significand).
using extended = boost::multiprecision::float128;

template <typename T>
struct is_complex : std::false_type {
};

template <typename T>
struct is_complex<std::complex<T>> : std::true_type {
};

template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

template <typename T>
struct real_of {
    using type = T;
};

template <typename T>
struct real_of<std::complex<T>> {
    using type = T;
};

template <typename T>
using real_t = typename real_of<T>::type;

template <typename R>
constexpr R machine_epsilon()
{
    return std::numeric_limits<R>::epsilon();
}

template <typename S>
real_t<S> magnitude(const S &x)
{
    using std::abs;
    return abs(x);
}

template <typename S>
S real_part(const S &x)
{
    return x;
}

template <typename R>
R real_part(const std::complex<R> &x)
{
    return x.real();
}

template <typename S>
S conjugate(const S &x)
{
    return x;
}

template <typename R>
std::complex<R> conjugate(const std::complex<R> &x)
{
    return std::conj(x);
}

// Number of significant decimal digits needed for an exact round trip.
template <typename R>
constexpr int round_trip_digits()
{
    if constexpr (std::is_same_v<R, extended>) {
        return 36;
    } else {
        return std::numeric_limits<R>::max_digits10;
    }
}

template <typename R>
std::string to_decimal(const R &x)
{
    if constexpr (std::is_same_v<R, extended>) {
        return x.str(round_trip_digits<R>(), std::ios_base::scientific);
    } else {
        return fmt::format("{:.{}g}", x, round_trip_digits<R>());
    }
}

template <typename R>
R from_decimal(const std::string &s)
{
    if constexpr (std::is_same_v<R, extended>) {
        return R(s);
    } else {
        return static_cast<R>(std::stold(s));
    }
}

template <>
inline double from_decimal<double>(const std::string &s)
{
    return std::stod(s);
}

template <typename S>
constexpr const char *scalar_kind_name()
{
    return is_complex_v<S> ? "complex" : "real";
}

} // namespace effstab
