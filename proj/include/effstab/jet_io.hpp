#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "effstab/errors.hpp"
#include "effstab/jet_vector.hpp"

namespace effstab
{

// Text format:
//   jet <n_vars> <order> <real|complex>
//   e1 ... en  re [im]        one line per stored monomial, graded order
// Decimals carry enough digits for an exact round trip.
template <typename S>
void write_jet(std::ostream &os, const Jet<S> &a)
{
    const auto &t = a.table();
    os << "jet " << a.nvars() << ' ' << a.order() << ' ' << scalar_kind_name<S>() << '\n';
    std::string line;
    for (std::size_t i = 0; i < a.size(); ++i) {
        line.clear();
        const auto *e = t.exponents(i);
        for (int v = 0; v < a.nvars(); ++v) {
            if (v) {
                line += ' ';
            }
            line += std::to_string(static_cast<int>(e[v]));
        }
        line += "  ";
        if constexpr (is_complex_v<S>) {
            line += to_decimal(a[i].real());
            line += ' ';
            line += to_decimal(a[i].imag());
        } else {
            line += to_decimal(a[i]);
        }
        os << line << '\n';
    }
}

template <typename S>
void write_jet_vector(std::ostream &os, const JetVector<S> &f)
{
    for (const auto &j : f) {
        write_jet(os, j);
    }
}

// Reads one jet; returns false at clean end of stream. Monomials absent from
// the file are zero.
template <typename S>
bool read_jet(std::istream &is, Jet<S> &out)
{
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] != '#') {
            break;
        }
        line.clear();
    }
    if (line.empty()) {
        return false;
    }
    std::istringstream hs(line);
    std::string tag, kind;
    int nvars = 0, order = 0;
    if (!(hs >> tag >> nvars >> order >> kind) || tag != "jet") {
        throw IoError("read_jet: malformed header '" + line + "'");
    }
    if (kind != scalar_kind_name<S>()) {
        throw IoError("read_jet: scalar kind '" + kind + "' does not match the requested type");
    }
    Jet<S> j(nvars, order);
    const std::size_t n = j.size();
    std::vector<int> e(static_cast<std::size_t>(nvars));
    for (std::size_t read = 0; read < n; ++read) {
        const auto pos = is.tellg();
        if (!std::getline(is, line)) {
            break;
        }
        if (line.rfind("jet ", 0) == 0) {
            is.seekg(pos);
            break;
        }
        std::istringstream ls(line);
        for (auto &x : e) {
            if (!(ls >> x)) {
                throw IoError("read_jet: malformed monomial line '" + line + "'");
            }
        }
        std::string re, im;
        if (!(ls >> re)) {
            throw IoError("read_jet: missing coefficient in '" + line + "'");
        }
        const auto idx = j.table().index(MultiIndex(e));
        if (idx == MonomialTable::npos) {
            throw IoError("read_jet: monomial exceeds declared order");
        }
        if constexpr (is_complex_v<S>) {
            if (!(ls >> im)) {
                throw IoError("read_jet: complex jet line lacks an imaginary part");
            }
            j[idx] = S(from_decimal<real_t<S>>(re), from_decimal<real_t<S>>(im));
        } else {
            j[idx] = from_decimal<S>(re);
        }
    }
    out = std::move(j);
    return true;
}

template <typename S>
JetVector<S> read_jet_vector(std::istream &is)
{
    std::vector<Jet<S>> comps;
    Jet<S> j;
    while (read_jet(is, j)) {
        comps.push_back(j);
    }
    if (comps.empty()) {
        throw IoError("read_jet_vector: no jets in stream");
    }
    return JetVector<S>(std::move(comps));
}

} // namespace effstab
