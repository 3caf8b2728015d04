#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "effstab/errors.hpp"
#include "effstab/jet.hpp"

namespace effstab
{

// Vector-valued jet map F(s) = (F_1, ..., F_m), all components sharing one table.
template <typename S>
class JetVector
{
public:
    using scalar_type = S;

    JetVector() = default;

    JetVector(std::size_t dim, int nvars, int order) : comps_(dim, Jet<S>(nvars, order)) {}

    explicit JetVector(std::vector<Jet<S>> comps) : comps_(std::move(comps))
    {
        for (std::size_t i = 1; i < comps_.size(); ++i) {
            comps_[0].require_compatible(comps_[i], "JetVector");
        }
    }

    static JetVector identity(int nvars, int order)
    {
        std::vector<Jet<S>> c;
        c.reserve(static_cast<std::size_t>(nvars));
        for (int i = 0; i < nvars; ++i) {
            c.push_back(Jet<S>::variable(i, nvars, order));
        }
        return JetVector(std::move(c));
    }

    std::size_t dim() const
    {
        return comps_.size();
    }
    int nvars() const
    {
        return comps_.front().nvars();
    }
    int order() const
    {
        return comps_.front().order();
    }
    const MonomialTable &table() const
    {
        return comps_.front().table();
    }

    Jet<S> &operator[](std::size_t i)
    {
        return comps_[i];
    }
    const Jet<S> &operator[](std::size_t i) const
    {
        return comps_[i];
    }
    auto begin()
    {
        return comps_.begin();
    }
    auto end()
    {
        return comps_.end();
    }
    auto begin() const
    {
        return comps_.begin();
    }
    auto end() const
    {
        return comps_.end();
    }

    template <typename T>
    JetVector<T> cast() const
    {
        std::vector<Jet<T>> c;
        c.reserve(comps_.size());
        for (const auto &j : comps_) {
            c.push_back(j.template cast<T>());
        }
        return JetVector<T>(std::move(c));
    }

    JetVector slice(int k) const
    {
        return map([k](const Jet<S> &j) { return j.slice(k); });
    }
    JetVector truncated(int k) const
    {
        return map([k](const Jet<S> &j) { return j.truncated(k); });
    }
    JetVector resized(int new_order) const
    {
        return map([new_order](const Jet<S> &j) { return j.resized(new_order); });
    }

    JetVector &operator+=(const JetVector &o)
    {
        require_same_dim(o);
        for (std::size_t i = 0; i < dim(); ++i) {
            comps_[i] += o.comps_[i];
        }
        return *this;
    }
    JetVector &operator-=(const JetVector &o)
    {
        require_same_dim(o);
        for (std::size_t i = 0; i < dim(); ++i) {
            comps_[i] -= o.comps_[i];
        }
        return *this;
    }
    friend JetVector operator+(JetVector a, const JetVector &b)
    {
        return a += b;
    }
    friend JetVector operator-(JetVector a, const JetVector &b)
    {
        return a -= b;
    }

    bool has_zero_constant() const
    {
        return std::all_of(comps_.begin(), comps_.end(), [](const Jet<S> &j) { return j.constant_term() == S{}; });
    }

    // Largest degree with a nonzero coefficient in any component, -1 if all zero.
    int max_nonzero_degree() const
    {
        int m = -1;
        for (const auto &j : comps_) {
            const auto d = j.nonzero_degrees();
            if (!d.empty()) {
                m = std::max(m, d.back());
            }
        }
        return m;
    }

    void require_same_dim(const JetVector &o) const
    {
        if (o.dim() != dim()) {
            throw ShapeError("JetVector: dimension mismatch");
        }
        comps_.front().require_compatible(o.comps_.front(), "JetVector");
    }

private:
    template <typename F>
    JetVector map(F f) const
    {
        std::vector<Jet<S>> c;
        c.reserve(comps_.size());
        for (const auto &j : comps_) {
            c.push_back(f(j));
        }
        return JetVector(std::move(c));
    }

    std::vector<Jet<S>> comps_;
};

template <typename S, typename P>
auto eval(const JetVector<S> &f, std::span<const P> point)
{
    using R = std::common_type_t<S, P>;
    const auto mon = monomial_values(f.table(), point);
    std::vector<R> out(f.dim());
    for (std::size_t i = 0; i < f.dim(); ++i) {
        out[i] = eval_with(f[i], mon);
    }
    return out;
}

template <typename S, typename P>
auto eval(const JetVector<S> &f, const std::vector<P> &point)
{
    return eval(f, std::span<const P>(point));
}

// Max over components of the weighted 1-norm.
template <typename S>
real_t<S> norm_at_radius(const JetVector<S> &f, const real_t<S> &rho)
{
    real_t<S> m(0);
    for (const auto &j : f) {
        m = std::max(m, norm_at_radius(j, rho));
    }
    return m;
}

template <typename S>
real_t<S> slice_norm(const JetVector<S> &f, int k, const real_t<S> &rho)
{
    real_t<S> m(0);
    for (const auto &j : f) {
        m = std::max(m, slice_norm(j, k, rho));
    }
    return m;
}

template <typename S>
real_t<S> max_abs_coeff(const JetVector<S> &f)
{
    real_t<S> m(0);
    for (const auto &j : f) {
        m = std::max(m, max_abs_coeff(j));
    }
    return m;
}

// Truncated composition outer(inner(s)).
//
// The powers inner^m are produced by a depth-first walk over the monomials of
// the outer map: each child m + e_w (w >= last variable of m) costs one
// truncated product of its parent with inner_w, so only the current path of
// at most order+1 jets is alive. Degree ranges of the partial products are
// tracked to skip empty slices; a linear inner map therefore reduces every
// product to a single slice pair.
template <typename S>
JetVector<S> compose(const JetVector<S> &outer, const JetVector<S> &inner)
{
    if (static_cast<std::size_t>(outer.nvars()) != inner.dim()) {
        throw ShapeError("compose: outer variable count must equal inner dimension");
    }
    if (outer.order() != inner.order()) {
        throw ShapeError("compose: outer and inner orders differ");
    }
    if (!inner.has_zero_constant()) {
        throw ShapeError("compose: inner map must have zero constant term");
    }

    const int n = outer.nvars();
    const int N = inner.order();
    const auto &ot = outer.table();
    const auto &it = inner.table();
    const int outer_top = outer.max_nonzero_degree();

    JetVector<S> out(outer.dim(), inner.nvars(), N);
    for (std::size_t i = 0; i < outer.dim(); ++i) {
        out[i][0] = outer[i][0];
    }
    if (outer_top < 1) {
        return out;
    }

    std::vector<std::vector<int>> gdeg(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        gdeg[static_cast<std::size_t>(v)] = inner[static_cast<std::size_t>(v)].nonzero_degrees();
    }

    struct Node {
        Jet<S> power;
        int lo = 0;
        int hi = 0;
    };
    std::vector<Node> stack(static_cast<std::size_t>(std::min(outer_top, N)) + 1);
    for (auto &nd : stack) {
        nd.power = Jet<S>(inner[0].table_ptr());
    }

    // Accumulate c * power into every output component whose outer coefficient
    // at this monomial is nonzero.
    auto accumulate = [&](std::size_t oidx, const Node &nd) {
        const std::size_t b = it.degree_begin(nd.lo), e = it.degree_end(nd.hi);
        for (std::size_t i = 0; i < outer.dim(); ++i) {
            const S c = outer[i][oidx];
            if (c == S{}) {
                continue;
            }
            S *dst = out[i].data();
            const S *src = nd.power.data();
            for (std::size_t k = b; k < e; ++k) {
                dst[k] += c * src[k];
            }
        }
    };

    // Iterative DFS. Frame: depth d, outer monomial index, last variable.
    struct Frame {
        std::size_t oidx;
        int last_var;
        int next_var;
    };
    std::vector<Frame> frames;
    frames.push_back({0, 0, 0});
    while (!frames.empty()) {
        Frame &f = frames.back();
        const int depth = static_cast<int>(frames.size()) - 1;
        if (f.next_var >= n || depth >= outer_top) {
            frames.pop_back();
            continue;
        }
        const int w = f.next_var++;
        const auto &g = inner[static_cast<std::size_t>(w)];
        const auto &gd = gdeg[static_cast<std::size_t>(w)];
        const std::size_t child = ot.raise(f.oidx, w);
        if (gd.empty() || child == MonomialTable::npos) {
            continue;
        }
        Node &cur = stack[static_cast<std::size_t>(depth) + 1];
        if (depth == 0) {
            cur.power = g;
            cur.lo = gd.front();
            cur.hi = gd.back();
        } else {
            const Node &par = stack[static_cast<std::size_t>(depth)];
            cur.lo = par.lo + gd.front();
            if (cur.lo > N) {
                continue;
            }
            cur.hi = std::min(N, par.hi + gd.back());
            S *dst = cur.power.data();
            std::fill(dst + it.degree_begin(cur.lo), dst + it.degree_end(cur.hi), S{});
            detail::mul_acc_kernel(dst, par.power.data(), par.lo, par.hi, g.data(), gd, it, N);
        }
        accumulate(child, cur);
        frames.push_back({child, w, w});
    }
    return out;
}

// Linear substitution outer(M s) for a dim x nvars matrix given row-major; this is
// just compose with a linear inner map, exposed for clarity at call sites.
template <typename S>
JetVector<S> compose_linear(const JetVector<S> &outer, const std::vector<std::vector<S>> &M)
{
    const int n = outer.nvars();
    JetVector<S> inner(static_cast<std::size_t>(n), static_cast<int>(M.front().size()), outer.order());
    for (int i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < M.front().size(); ++j) {
            inner[static_cast<std::size_t>(i)][j + 1] = M[static_cast<std::size_t>(i)][j];
        }
    }
    return compose(outer, inner);
}

// Left multiplication by a constant matrix: (M F)_i = sum_j M_ij F_j.
template <typename S>
JetVector<S> apply_matrix(const std::vector<std::vector<S>> &M, const JetVector<S> &f)
{
    JetVector<S> out(M.size(), f.nvars(), f.order());
    for (std::size_t i = 0; i < M.size(); ++i) {
        for (std::size_t j = 0; j < f.dim(); ++j) {
            if (M[i][j] != S{}) {
                out[i].axpy(M[i][j], f[j]);
            }
        }
    }
    return out;
}

// Inverse of a near-identity map c = s - chi(s) (identity linear part, no
// constant term) by the fixed-point iteration d <- s + chi(d). Each pass fixes
// at least one more degree, so at most order passes are needed; the loop stops
// as soon as an iterate repeats exactly.
template <typename S>
JetVector<S> invert_near_identity(const JetVector<S> &c)
{
    const int n = c.nvars();
    if (c.dim() != static_cast<std::size_t>(n)) {
        throw ShapeError("invert_near_identity: map must be square");
    }
    if (!c.has_zero_constant()) {
        throw ShapeError("invert_near_identity: constant term must vanish");
    }
    const auto &t = c.table();
    const auto tol = real_t<S>(64) * machine_epsilon<real_t<S>>();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const S expect = (i == j) ? S(1) : S{};
            if (magnitude(c[static_cast<std::size_t>(i)][t.degree_begin(1) + static_cast<std::size_t>(j)] - expect) > tol) {
                throw ShapeError("invert_near_identity: linear part is not the identity");
            }
        }
    }
    const auto id = JetVector<S>::identity(n, c.order());
    JetVector<S> chi = id - c;
    for (auto &comp : chi) {
        for (std::size_t k = t.degree_begin(1); k < t.degree_end(1); ++k) {
            comp[k] = S{};
        }
    }
    JetVector<S> d = id;
    for (int it = 0; it < c.order(); ++it) {
        JetVector<S> next = id + compose(chi, d);
        bool same = true;
        for (std::size_t i = 0; i < next.dim() && same; ++i) {
            same = next[i].coeffs() == d[i].coeffs();
        }
        d = std::move(next);
        if (same) {
            break;
        }
    }
    return d;
}

} // namespace effstab
