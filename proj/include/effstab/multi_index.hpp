#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace effstab
{

// Exponent tuple of a monomial s^j.
class MultiIndex
{
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> e) : e_(std::move(e))
    {
        for (int x : e_) {
            if (x < 0) {
                throw std::invalid_argument("MultiIndex: negative exponent");
            }
        }
    }
    MultiIndex(std::initializer_list<int> e) : MultiIndex(std::vector<int>(e)) {}

    static MultiIndex unit(int nvars, int i)
    {
        std::vector<int> e(static_cast<std::size_t>(nvars), 0);
        e.at(static_cast<std::size_t>(i)) = 1;
        return MultiIndex(std::move(e));
    }

    int degree() const
    {
        return std::accumulate(e_.begin(), e_.end(), 0);
    }
    std::size_t size() const
    {
        return e_.size();
    }
    int operator[](std::size_t i) const
    {
        return e_[i];
    }
    const std::vector<int> &exponents() const
    {
        return e_;
    }

    friend bool operator==(const MultiIndex &, const MultiIndex &) = default;

    std::string to_string() const
    {
        std::string s = "(";
        for (std::size_t i = 0; i < e_.size(); ++i) {
            s += (i ? "," : "") + std::to_string(e_[i]);
        }
        return s + ")";
    }

private:
    std::vector<int> e_;
};

// Dense graded-lexicographic layout of all monomials of degree 0..order in nvars
// variables, with the index tables used by truncated multiplication. Within one
// degree, monomials with a larger leading exponent come first, so for 4 variables
// the degree-1 block is s1, s2, s3, s4.
class MonomialTable
{
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    static std::shared_ptr<const MonomialTable> get(int nvars, int order)
    {
        if (nvars < 1 || order < 0) {
            throw std::invalid_argument("MonomialTable: need nvars >= 1 and order >= 0");
        }
        static std::mutex mtx;
        static std::map<std::pair<int, int>, std::shared_ptr<const MonomialTable>> cache;
        std::lock_guard lock(mtx);
        auto &slot = cache[{nvars, order}];
        if (!slot) {
            slot = std::shared_ptr<const MonomialTable>(new MonomialTable(nvars, order));
        }
        return slot;
    }

    int nvars() const
    {
        return nvars_;
    }
    int order() const
    {
        return order_;
    }
    std::size_t size() const
    {
        return degree_of_.size();
    }

    // First flat offset of the degree-d block; degree_begin(order + 1) == size().
    std::size_t degree_begin(int d) const
    {
        return begin_[static_cast<std::size_t>(std::clamp(d, 0, order_ + 1))];
    }
    std::size_t degree_end(int d) const
    {
        return degree_begin(d + 1);
    }
    int degree(std::size_t idx) const
    {
        return degree_of_[idx];
    }

    const std::uint8_t *exponents(std::size_t idx) const
    {
        return &exps_[idx * static_cast<std::size_t>(nvars_)];
    }

    MultiIndex multi_index(std::size_t idx) const
    {
        const auto *e = exponents(idx);
        return MultiIndex(std::vector<int>(e, e + nvars_));
    }

    // Flat offset of a multi-index, or npos when its degree exceeds the order.
    std::size_t index(const MultiIndex &m) const
    {
        if (static_cast<int>(m.size()) != nvars_) {
            throw std::invalid_argument("MonomialTable::index: wrong number of variables");
        }
        const int d = m.degree();
        if (d > order_) {
            return npos;
        }
        return degree_begin(d) + rank_in_degree(m.exponents().data(), nvars_, d);
    }

    // Row a of the product table: row[b] == index(a + b) for every b with
    // b < degree_end(order - degree(a)).
    const std::uint32_t *product_row(std::size_t a) const
    {
        return &prod_[prod_start_[a]];
    }

    // index(m + e_v), or npos when that exceeds the order.
    std::size_t raise(std::size_t idx, int v) const
    {
        return raise_[idx * static_cast<std::size_t>(nvars_) + static_cast<std::size_t>(v)];
    }

    // index(m - e_v), or npos when m_v == 0.
    std::size_t lower(std::size_t idx, int v) const
    {
        return lower_[idx * static_cast<std::size_t>(nvars_) + static_cast<std::size_t>(v)];
    }

    // Number of monomials of degree exactly d in n variables.
    static std::size_t count_exact(int n, int d)
    {
        return binomial(d + n - 1, n - 1);
    }

private:
    MonomialTable(int nvars, int order) : nvars_(nvars), order_(order)
    {
        begin_.resize(static_cast<std::size_t>(order) + 2);
        begin_[0] = 0;
        for (int d = 0; d <= order; ++d) {
            begin_[static_cast<std::size_t>(d) + 1] = begin_[static_cast<std::size_t>(d)] + count_exact(nvars, d);
        }
        const std::size_t n = begin_.back();
        if (n > std::size_t(1) << 31) {
            throw std::length_error("MonomialTable: too many monomials");
        }
        degree_of_.resize(n);
        exps_.resize(n * static_cast<std::size_t>(nvars));

        std::vector<int> e(static_cast<std::size_t>(nvars), 0);
        std::size_t pos = 0;
        for (int d = 0; d <= order; ++d) {
            enumerate(e, 0, d, pos, d);
        }
        assert(pos == n);

        const auto nv = static_cast<std::size_t>(nvars);
        raise_.assign(n * nv, npos);
        lower_.assign(n * nv, npos);
        std::vector<int> tmp(nv);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t v = 0; v < nv; ++v) {
                for (std::size_t w = 0; w < nv; ++w) {
                    tmp[w] = exps_[i * nv + w];
                }
                if (degree_of_[i] < order) {
                    ++tmp[v];
                    raise_[i * nv + v] = degree_begin(degree_of_[i] + 1) + rank_in_degree(tmp.data(), nvars, degree_of_[i] + 1);
                    --tmp[v];
                }
                if (tmp[v] > 0) {
                    --tmp[v];
                    lower_[i * nv + v] = degree_begin(degree_of_[i] - 1) + rank_in_degree(tmp.data(), nvars, degree_of_[i] - 1);
                }
            }
        }

        prod_start_.resize(n + 1);
        std::size_t total = 0;
        for (std::size_t a = 0; a < n; ++a) {
            prod_start_[a] = total;
            total += degree_end(order - degree_of_[a]);
        }
        prod_start_[n] = total;
        prod_.resize(total);
        for (std::size_t a = 0; a < n; ++a) {
            const std::size_t len = degree_end(order - degree_of_[a]);
            auto *row = &prod_[prod_start_[a]];
            for (std::size_t b = 0; b < len; ++b) {
                for (std::size_t w = 0; w < nv; ++w) {
                    tmp[w] = exps_[a * nv + w] + exps_[b * nv + w];
                }
                const int d = degree_of_[a] + degree_of_[b];
                row[b] = static_cast<std::uint32_t>(degree_begin(d) + rank_in_degree(tmp.data(), nvars, d));
            }
        }
    }

    void enumerate(std::vector<int> &e, int var, int remaining, std::size_t &pos, int d)
    {
        if (var == nvars_ - 1) {
            e[static_cast<std::size_t>(var)] = remaining;
            degree_of_[pos] = d;
            for (int w = 0; w < nvars_; ++w) {
                exps_[pos * static_cast<std::size_t>(nvars_) + static_cast<std::size_t>(w)] = static_cast<std::uint8_t>(e[static_cast<std::size_t>(w)]);
            }
            ++pos;
            return;
        }
        for (int x = remaining; x >= 0; --x) {
            e[static_cast<std::size_t>(var)] = x;
            enumerate(e, var + 1, remaining - x, pos, d);
        }
    }

    template <typename Int>
    static std::size_t rank_in_degree(const Int *e, int n, int d)
    {
        // Monomials with a larger leading exponent precede this one.
        std::size_t r = 0;
        for (int v = 0; v < n - 1; ++v) {
            const int ev = static_cast<int>(e[v]);
            for (int t = ev + 1; t <= d; ++t) {
                r += count_exact(n - v - 1, d - t);
            }
            d -= ev;
        }
        return r;
    }

    static std::size_t binomial(int n, int k)
    {
        if (k < 0 || k > n) {
            return 0;
        }
        std::size_t r = 1;
        for (int i = 1; i <= k; ++i) {
            r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
        }
        return r;
    }

    int nvars_;
    int order_;
    std::vector<std::size_t> begin_;
    std::vector<int> degree_of_;
    std::vector<std::uint8_t> exps_;
    std::vector<std::size_t> raise_;
    std::vector<std::size_t> lower_;
    std::vector<std::size_t> prod_start_;
    std::vector<std::uint32_t> prod_;
};

} // namespace effstab
