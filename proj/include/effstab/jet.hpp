#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "effstab/errors.hpp"
#include "effstab/multi_index.hpp"
#include "effstab/scalar.hpp"

namespace effstab
{

// Truncated multivariate Taylor polynomial with dense graded storage. All
// monomials of degree 0..order are stored; every operation truncates at order.
template <typename S>
class Jet
{
public:
    using scalar_type = S;
    using real_type = real_t<S>;

    Jet() = default;

    Jet(int nvars, int order) : Jet(MonomialTable::get(nvars, order)) {}

    explicit Jet(std::shared_ptr<const MonomialTable> table) : table_(std::move(table)), c_(table_->size(), S{}) {}

    Jet(std::shared_ptr<const MonomialTable> table, std::vector<S> coeffs) : table_(std::move(table)), c_(std::move(coeffs))
    {
        if (c_.size() != table_->size()) {
            throw ShapeError("Jet: coefficient count does not match the monomial table");
        }
    }

    static Jet constant(const S &value, int nvars, int order)
    {
        Jet j(nvars, order);
        j.c_[0] = value;
        return j;
    }

    static Jet variable(int i, int nvars, int order)
    {
        if (i < 0 || i >= nvars) {
            throw std::out_of_range("Jet::variable: index " + std::to_string(i) + " out of range");
        }
        if (order < 1) {
            throw std::invalid_argument("Jet::variable: order must be at least 1");
        }
        Jet j(nvars, order);
        j.c_[static_cast<std::size_t>(i) + 1] = S(1);
        return j;
    }

    int nvars() const
    {
        return table_->nvars();
    }
    int order() const
    {
        return table_->order();
    }
    std::size_t size() const
    {
        return c_.size();
    }
    bool empty() const
    {
        return !table_;
    }
    const MonomialTable &table() const
    {
        return *table_;
    }
    const std::shared_ptr<const MonomialTable> &table_ptr() const
    {
        return table_;
    }

    S &operator[](std::size_t i)
    {
        return c_[i];
    }
    const S &operator[](std::size_t i) const
    {
        return c_[i];
    }
    S *data()
    {
        return c_.data();
    }
    const S *data() const
    {
        return c_.data();
    }
    const std::vector<S> &coeffs() const
    {
        return c_;
    }

    S coeff(const MultiIndex &m) const
    {
        const auto idx = table_->index(m);
        return idx == MonomialTable::npos ? S{} : c_[idx];
    }

    void set_coeff(const MultiIndex &m, const S &v)
    {
        const auto idx = table_->index(m);
        if (idx == MonomialTable::npos) {
            throw ShapeError("Jet::set_coeff: monomial " + m.to_string() + " exceeds the truncation order");
        }
        c_[idx] = v;
    }

    const S &constant_term() const
    {
        return c_[0];
    }

    bool compatible(const Jet &o) const
    {
        return table_ && o.table_ && (table_ == o.table_ || (nvars() == o.nvars() && order() == o.order()));
    }

    void require_compatible(const Jet &o, const char *what) const
    {
        if (!compatible(o)) {
            throw ShapeError(std::string(what) + ": incompatible jets");
        }
    }

    bool slice_is_zero(int k) const
    {
        for (std::size_t i = table_->degree_begin(k); i < table_->degree_end(k); ++i) {
            if (c_[i] != S{}) {
                return false;
            }
        }
        return true;
    }

    // Ascending list of degrees whose homogeneous slice is not identically zero.
    std::vector<int> nonzero_degrees() const
    {
        std::vector<int> d;
        for (int k = 0; k <= order(); ++k) {
            if (!slice_is_zero(k)) {
                d.push_back(k);
            }
        }
        return d;
    }

    bool is_zero() const
    {
        return std::all_of(c_.begin(), c_.end(), [](const S &x) { return x == S{}; });
    }

    // Homogeneous degree-k part as a jet of the same shape.
    Jet slice(int k) const
    {
        Jet r(table_);
        for (std::size_t i = table_->degree_begin(k); i < table_->degree_end(k); ++i) {
            r.c_[i] = c_[i];
        }
        return r;
    }

    // Drops every degree above k (keeps the shape).
    Jet truncated(int k) const
    {
        Jet r(*this);
        std::fill(r.c_.begin() + static_cast<std::ptrdiff_t>(table_->degree_end(k)), r.c_.end(), S{});
        return r;
    }

    // Same polynomial stored at another truncation order. The graded layout is
    // order independent, so this is a prefix copy.
    Jet resized(int new_order) const
    {
        Jet r(nvars(), new_order);
        const std::size_t n = std::min(r.size(), size());
        std::copy(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(n), r.c_.begin());
        return r;
    }

    template <typename T>
    Jet<T> cast() const
    {
        std::vector<T> out(c_.size());
        for (std::size_t i = 0; i < c_.size(); ++i) {
            if constexpr (is_complex_v<S> && !is_complex_v<T>) {
                out[i] = static_cast<T>(c_[i].real());
            } else if constexpr (is_complex_v<T> && !is_complex_v<S>) {
                out[i] = T(static_cast<real_t<T>>(c_[i]), real_t<T>(0));
            } else {
                out[i] = static_cast<T>(c_[i]);
            }
        }
        return Jet<T>(table_, std::move(out));
    }

    Jet operator-() const
    {
        Jet r(*this);
        for (auto &x : r.c_) {
            x = -x;
        }
        return r;
    }

    Jet &operator+=(const Jet &o)
    {
        require_compatible(o, "Jet::operator+=");
        for (std::size_t i = 0; i < c_.size(); ++i) {
            c_[i] += o.c_[i];
        }
        return *this;
    }
    Jet &operator-=(const Jet &o)
    {
        require_compatible(o, "Jet::operator-=");
        for (std::size_t i = 0; i < c_.size(); ++i) {
            c_[i] -= o.c_[i];
        }
        return *this;
    }
    Jet &operator+=(const S &v)
    {
        c_[0] += v;
        return *this;
    }
    Jet &operator-=(const S &v)
    {
        c_[0] -= v;
        return *this;
    }
    Jet &operator*=(const S &v)
    {
        for (auto &x : c_) {
            x *= v;
        }
        return *this;
    }
    Jet &operator/=(const S &v)
    {
        for (auto &x : c_) {
            x /= v;
        }
        return *this;
    }
    Jet &operator*=(const Jet &o);
    Jet &operator/=(const Jet &o);

    // this += alpha * o
    void axpy(const S &alpha, const Jet &o)
    {
        require_compatible(o, "Jet::axpy");
        for (std::size_t i = 0; i < c_.size(); ++i) {
            c_[i] += alpha * o.c_[i];
        }
    }

    void set_zero()
    {
        std::fill(c_.begin(), c_.end(), S{});
    }

private:
    std::shared_ptr<const MonomialTable> table_;
    std::vector<S> c_;
};

namespace detail
{

// out += a * b restricted to a-degrees [alo, ahi], the listed b-degrees and
// result degrees <= maxdeg. bdeg must be ascending.
template <typename S>
void mul_acc_kernel(S *out, const S *a, int alo, int ahi, const S *b, const std::vector<int> &bdeg, const MonomialTable &t, int maxdeg)
{
    for (int p = alo; p <= ahi; ++p) {
        if (bdeg.empty() || p + bdeg.front() > maxdeg) {
            break;
        }
        const std::size_t iend = t.degree_end(p);
        for (std::size_t i = t.degree_begin(p); i < iend; ++i) {
            const S ai = a[i];
            if (ai == S{}) {
                continue;
            }
            const std::uint32_t *row = t.product_row(i);
            for (int q : bdeg) {
                if (p + q > maxdeg) {
                    break;
                }
                const std::size_t jend = t.degree_end(q);
                for (std::size_t j = t.degree_begin(q); j < jend; ++j) {
                    out[row[j]] += ai * b[j];
                }
            }
        }
    }
}

// out_{p+q} += w * a_p * b_q for a single pair of homogeneous slices.
template <typename S>
void slice_mul_acc(S *out, const S *a, int p, const S *b, int q, const S &w, const MonomialTable &t)
{
    const std::size_t jb = t.degree_begin(q), je = t.degree_end(q);
    for (std::size_t i = t.degree_begin(p); i < t.degree_end(p); ++i) {
        if (a[i] == S{}) {
            continue;
        }
        const S ai = w * a[i];
        const std::uint32_t *row = t.product_row(i);
        for (std::size_t j = jb; j < je; ++j) {
            out[row[j]] += ai * b[j];
        }
    }
}

template <typename S>
std::pair<int, int> degree_span(const Jet<S> &a)
{
    int lo = -1, hi = -1;
    for (int k = 0; k <= a.order(); ++k) {
        if (!a.slice_is_zero(k)) {
            if (lo < 0) {
                lo = k;
            }
            hi = k;
        }
    }
    return {lo, hi};
}

} // namespace detail

// out += a * b (truncated). out must not alias a or b.
template <typename S>
void mul_acc(Jet<S> &out, const Jet<S> &a, const Jet<S> &b)
{
    a.require_compatible(b, "mul_acc");
    out.require_compatible(a, "mul_acc");
    const auto [lo, hi] = detail::degree_span(a);
    if (lo < 0) {
        return;
    }
    detail::mul_acc_kernel(out.data(), a.data(), lo, hi, b.data(), b.nonzero_degrees(), a.table(), a.order());
}

template <typename S>
Jet<S> mul(const Jet<S> &a, const Jet<S> &b)
{
    Jet<S> r(a.table_ptr());
    mul_acc(r, a, b);
    return r;
}

template <typename S>
Jet<S> &Jet<S>::operator*=(const Jet<S> &o)
{
    *this = mul(*this, o);
    return *this;
}

template <typename S>
Jet<S> operator+(Jet<S> a, const Jet<S> &b)
{
    return a += b;
}
template <typename S>
Jet<S> operator-(Jet<S> a, const Jet<S> &b)
{
    return a -= b;
}
template <typename S>
Jet<S> operator*(const Jet<S> &a, const Jet<S> &b)
{
    return mul(a, b);
}
template <typename S>
Jet<S> operator+(Jet<S> a, const S &v)
{
    return a += v;
}
template <typename S>
Jet<S> operator+(const S &v, Jet<S> a)
{
    return a += v;
}
template <typename S>
Jet<S> operator-(Jet<S> a, const S &v)
{
    return a -= v;
}
template <typename S>
Jet<S> operator-(const S &v, const Jet<S> &a)
{
    Jet<S> r = -a;
    return r += v;
}
template <typename S>
Jet<S> operator*(Jet<S> a, const S &v)
{
    return a *= v;
}
template <typename S>
Jet<S> operator*(const S &v, Jet<S> a)
{
    return a *= v;
}
template <typename S>
Jet<S> operator/(Jet<S> a, const S &v)
{
    return a /= v;
}

// ---------------------------------------------------------------------------
// Intrinsics. Each uses the Euler-operator recurrence E(f(a)) = f'(a) E(a),
// where E multiplies the degree-k slice by k, so slice k of the result only
// needs slices < k of the result.

enum class Intrinsic { reciprocal, sqrt, pow, exp, log, sin, cos };

namespace detail
{

template <typename S>
void check_nonzero_constant(const Jet<S> &a, const char *what)
{
    if (a.constant_term() == S{}) {
        throw DomainError(std::string(what) + ": constant term is zero");
    }
}

template <typename S>
void check_positive_constant(const Jet<S> &a, const char *what)
{
    if constexpr (is_complex_v<S>) {
        check_nonzero_constant(a, what);
    } else {
        if (!(a.constant_term() > S(0))) {
            throw DomainError(std::string(what) + ": constant term must be positive");
        }
    }
}

} // namespace detail

template <typename S>
Jet<S> reciprocal(const Jet<S> &a)
{
    detail::check_nonzero_constant(a, "reciprocal");
    const auto &t = a.table();
    const auto adeg = a.nonzero_degrees();
    Jet<S> b(a.table_ptr());
    const S inv0 = S(1) / a[0];
    b[0] = inv0;
    for (int k = 1; k <= a.order(); ++k) {
        for (int p : adeg) {
            if (p == 0) {
                continue;
            }
            if (p > k) {
                break;
            }
            detail::slice_mul_acc(b.data(), a.data(), p, b.data(), k - p, S(1), t);
        }
        for (std::size_t i = t.degree_begin(k); i < t.degree_end(k); ++i) {
            b[i] *= -inv0;
        }
    }
    return b;
}

template <typename S>
Jet<S> pow(const Jet<S> &a, const real_t<S> &alpha)
{
    using std::pow;
    const bool integral = alpha == real_t<S>(static_cast<long long>(alpha));
    // The recurrence divides by a0, so even non-negative integer powers need a0 != 0.
    if (integral) {
        detail::check_nonzero_constant(a, "pow");
    } else {
        detail::check_positive_constant(a, "pow");
    }
    const auto &t = a.table();
    const auto adeg = a.nonzero_degrees();
    Jet<S> b(a.table_ptr());
    b[0] = pow(a[0], alpha);
    const S a0 = a[0];
    for (int k = 1; k <= a.order(); ++k) {
        for (int p : adeg) {
            if (p == 0) {
                continue;
            }
            if (p > k) {
                break;
            }
            const S w = S(alpha * real_t<S>(p) - real_t<S>(k - p));
            detail::slice_mul_acc(b.data(), a.data(), p, b.data(), k - p, w, t);
        }
        const S scale = S(1) / (S(real_t<S>(k)) * a0);
        for (std::size_t i = t.degree_begin(k); i < t.degree_end(k); ++i) {
            b[i] *= scale;
        }
    }
    return b;
}

template <typename S>
Jet<S> sqrt(const Jet<S> &a)
{
    detail::check_positive_constant(a, "sqrt");
    return pow(a, real_t<S>(1) / real_t<S>(2));
}

template <typename S>
Jet<S> exp(const Jet<S> &a)
{
    using std::exp;
    const auto &t = a.table();
    const auto adeg = a.nonzero_degrees();
    Jet<S> b(a.table_ptr());
    b[0] = exp(a[0]);
    for (int k = 1; k <= a.order(); ++k) {
        for (int p : adeg) {
            if (p == 0) {
                continue;
            }
            if (p > k) {
                break;
            }
            detail::slice_mul_acc(b.data(), a.data(), p, b.data(), k - p, S(real_t<S>(p)), t);
        }
        const S scale = S(real_t<S>(1) / real_t<S>(k));
        for (std::size_t i = t.degree_begin(k); i < t.degree_end(k); ++i) {
            b[i] *= scale;
        }
    }
    return b;
}

template <typename S>
Jet<S> log(const Jet<S> &a)
{
    using std::log;
    detail::check_positive_constant(a, "log");
    const auto &t = a.table();
    const auto adeg = a.nonzero_degrees();
    Jet<S> b(a.table_ptr());
    b[0] = log(a[0]);
    const S a0 = a[0];
    for (int k = 1; k <= a.order(); ++k) {
        for (int p : adeg) {
            if (p == 0) {
                continue;
            }
            if (p >= k) {
                break;
            }
            detail::slice_mul_acc(b.data(), a.data(), p, b.data(), k - p, S(-real_t<S>(k - p)), t);
        }
        const S kk = S(real_t<S>(k));
        const S scale = S(1) / (kk * a0);
        for (std::size_t i = t.degree_begin(k); i < t.degree_end(k); ++i) {
            b[i] = (b[i] + kk * a[i]) * scale;
        }
    }
    return b;
}

// Returns (sin a, cos a) from the coupled recurrence.
template <typename S>
std::pair<Jet<S>, Jet<S>> sincos(const Jet<S> &a)
{
    using std::cos;
    using std::sin;
    const auto &t = a.table();
    const auto adeg = a.nonzero_degrees();
    Jet<S> s(a.table_ptr()), c(a.table_ptr());
    s[0] = sin(a[0]);
    c[0] = cos(a[0]);
    for (int k = 1; k <= a.order(); ++k) {
        for (int p : adeg) {
            if (p == 0) {
                continue;
            }
            if (p > k) {
                break;
            }
            const S w = S(real_t<S>(p));
            detail::slice_mul_acc(s.data(), a.data(), p, c.data(), k - p, w, t);
            detail::slice_mul_acc(c.data(), a.data(), p, s.data(), k - p, -w, t);
        }
        const S scale = S(real_t<S>(1) / real_t<S>(k));
        for (std::size_t i = t.degree_begin(k); i < t.degree_end(k); ++i) {
            s[i] *= scale;
            c[i] *= scale;
        }
    }
    return {std::move(s), std::move(c)};
}

template <typename S>
Jet<S> sin(const Jet<S> &a)
{
    return sincos(a).first;
}

template <typename S>
Jet<S> cos(const Jet<S> &a)
{
    return sincos(a).second;
}

template <typename S>
Jet<S> intrinsic(Intrinsic f, const Jet<S> &a, const real_t<S> &alpha = real_t<S>(1))
{
    switch (f) {
    case Intrinsic::reciprocal:
        return reciprocal(a);
    case Intrinsic::sqrt:
        return sqrt(a);
    case Intrinsic::pow:
        return pow(a, alpha);
    case Intrinsic::exp:
        return exp(a);
    case Intrinsic::log:
        return log(a);
    case Intrinsic::sin:
        return sin(a);
    case Intrinsic::cos:
        return cos(a);
    }
    throw std::invalid_argument("intrinsic: unknown function tag");
}

template <typename S>
Jet<S> &Jet<S>::operator/=(const Jet<S> &o)
{
    *this = mul(*this, reciprocal(o));
    return *this;
}

template <typename S>
Jet<S> operator/(const Jet<S> &a, const Jet<S> &b)
{
    return mul(a, reciprocal(b));
}

template <typename S>
Jet<S> operator/(const S &v, const Jet<S> &b)
{
    return reciprocal(b) * v;
}

// ---------------------------------------------------------------------------
// Calculus, evaluation and norms.

// Partial derivative with respect to s_v; the top slice of the result is zero.
template <typename S>
Jet<S> derivative(const Jet<S> &a, int v)
{
    if (v < 0 || v >= a.nvars()) {
        throw std::out_of_range("derivative: variable index out of range");
    }
    const auto &t = a.table();
    Jet<S> r(a.table_ptr());
    for (std::size_t i = 1; i < a.size(); ++i) {
        const int e = t.exponents(i)[v];
        if (e > 0 && a[i] != S{}) {
            r[t.lower(i, v)] += S(real_t<S>(e)) * a[i];
        }
    }
    return r;
}

// Values of every monomial of the table at a point, reusable across jets.
template <typename P>
std::vector<P> monomial_values(const MonomialTable &t, std::span<const P> point)
{
    if (static_cast<int>(point.size()) != t.nvars()) {
        throw ShapeError("monomial_values: point dimension mismatch");
    }
    std::vector<P> m(t.size());
    m[0] = P(1);
    for (std::size_t i = 1; i < t.size(); ++i) {
        const auto *e = t.exponents(i);
        int v = 0;
        while (e[v] == 0) {
            ++v;
        }
        m[i] = m[t.lower(i, v)] * point[static_cast<std::size_t>(v)];
    }
    return m;
}

template <typename S, typename P>
auto eval_with(const Jet<S> &a, const std::vector<P> &monomials)
{
    using R = std::common_type_t<S, P>;
    R sum{};
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += R(a[i]) * R(monomials[i]);
    }
    return sum;
}

template <typename S, typename P>
auto eval(const Jet<S> &a, std::span<const P> point)
{
    return eval_with(a, monomial_values(a.table(), point));
}

template <typename S, typename P>
auto eval(const Jet<S> &a, const std::vector<P> &point)
{
    return eval(a, std::span<const P>(point));
}

// Weighted 1-norm sum |c_j| rho^|j| of the degree-k slice.
template <typename S>
real_t<S> slice_norm(const Jet<S> &a, int k, const real_t<S> &rho)
{
    using std::pow;
    const auto &t = a.table();
    real_t<S> s(0);
    for (std::size_t i = t.degree_begin(k); i < t.degree_end(k); ++i) {
        s += magnitude(a[i]);
    }
    return s * real_t<S>(pow(rho, k));
}

template <typename S>
real_t<S> norm_at_radius(const Jet<S> &a, const real_t<S> &rho)
{
    if (!(rho > 0)) {
        throw std::invalid_argument("norm_at_radius: radius must be positive");
    }
    real_t<S> s(0);
    for (int k = 0; k <= a.order(); ++k) {
        s += slice_norm(a, k, rho);
    }
    return s;
}

template <typename S>
real_t<S> max_abs_coeff(const Jet<S> &a)
{
    real_t<S> m(0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, real_t<S>(magnitude(a[i])));
    }
    return m;
}

} // namespace effstab
