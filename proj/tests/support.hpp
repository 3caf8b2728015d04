#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "effstab/jet_vector.hpp"

namespace effstab::test
{

// Random jet whose nonzero degrees are those in [min_deg, max_deg].
inline Jet<double> random_jet(std::mt19937_64 &rng, int nvars, int order, int min_deg = 0, int max_deg = -1, double scale = 1.0)
{
    if (max_deg < 0) {
        max_deg = order;
    }
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Jet<double> j(nvars, order);
    const auto &t = j.table();
    for (std::size_t i = t.degree_begin(min_deg); i < t.degree_end(max_deg); ++i) {
        j[i] = scale * u(rng);
    }
    return j;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double> &x, const std::vector<double> &y)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace effstab::test
