#include <catch_amalgamated.hpp>

#include <cmath>

#include "effstab/diagonalize.hpp"
#include "effstab/validate.hpp"
#include "orbit_fixture.hpp"

using namespace effstab;

namespace
{

const NormalForm &nf5()
{
    static const NormalForm nf = [] {
        const auto m = poincare_map_jet(test::reference_fixed_point(), test::em_mu(), 5);
        auto sp = spectrum_of(linear_part(m.G));
        fix_scale(m.G, sp);
        return normalize(linear_normalize(m.G, sp), sp);
    }();
    return nf;
}

} // namespace

TEST_CASE("log-log slope of exact power laws", "[validate]")
{
    const auto x = log_spaced(1e-4, 1e-1, 7);
    CHECK(x.front() == Catch::Approx(1e-4).epsilon(1e-15));
    CHECK(x.back() == Catch::Approx(1e-1).epsilon(1e-14));
    std::vector<double> y;
    for (double v : x) {
        y.push_back(3.5 * std::pow(v, 6.0));
    }
    CHECK(loglog_slope(x, y) == Catch::Approx(6.0).epsilon(1e-12));
    CHECK_THROWS(loglog_slope({1.0}, {1.0}));
}

TEST_CASE("drift sample points are deterministic and inside a/2", "[validate]")
{
    const auto p = drift_sample_points(1e-3, 9, 42);
    CHECK(p.size() == 9);
    int on_circle = 0;
    for (const auto &s : p) {
        CHECK(s[0] <= 5e-4);
        CHECK(s[2] <= 5e-4);
        on_circle += s[0] == 5e-4 && s[2] == 5e-4;
    }
    CHECK(on_circle == 5);
    CHECK(drift_sample_points(1e-3, 9, 42) == p);
    CHECK(drift_sample_points(1e-3, 9, 43) != p);
}

TEST_CASE("coordinate round trip through the normal-form transform", "[validate]")
{
    const auto &nf = nf5();
    const auto &fp = test::reference_fixed_point();
    const auto z = nf_point(1e-3, 0.4, 2e-3, 2.0);
    const auto back = section_point_to_nf(nf, fp, nf_to_section_point(nf, fp, z));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(back[i] - z[i]) < 1e-12);
    }
    CHECK(inverse_transform_residual(nf, 1e-3) < 1e-14);
    CHECK(inverse_transform_residual(nf, 1e-2) > inverse_transform_residual(nf, 1e-3));
}

TEST_CASE("zero iterations give zero drift", "[validate]")
{
    const auto r = monte_carlo_drift(test::reference_fixed_point(), nf5(), 1e-3, 4, 0, test::em_mu(), 1.0);
    CHECK(r.escapes == 0);
    CHECK(r.violations == 0);
    CHECK(r.max_observed_drift[0] == 0.0);
    CHECK(r.max_observed_drift[1] == 0.0);
    CHECK(r.per_sample.size() == 4);
}

TEST_CASE("short Monte Carlo run stays confined", "[validate]")
{
    const double a = 2e-3;
    const auto r = monte_carlo_drift(test::reference_fixed_point(), nf5(), a, 4, 20, test::em_mu(), 1.0);
    CHECK(r.escapes == 0);
    CHECK(r.violations == 0);
    CHECK(std::max(r.max_observed_drift[0], r.max_observed_drift[1]) < 1e-2 * a);
    CHECK(r.step_bound_exceedances == 0);
    for (const auto &s : r.per_sample) {
        CHECK(s.completed == 20);
    }
}

TEST_CASE("STM agrees with finite differences", "[validate]")
{
    const auto s = stm_finite_difference_check(test::reference_fixed_point(), test::em_mu());
    CHECK(s.max_relative_error < 1e-5);
}

TEST_CASE("conjugacy residual decays with the truncation order", "[validate]")
{
    // At order 5 the remainder clears the binary64 floor (~1e-10 in these
    // units) for r >= 2e-2, so the slope there is the remainder's degree.
    const auto &nf = nf5();
    const auto scan = conjugacy_residual_scan(test::reference_fixed_point(), nf, test::em_mu(), log_spaced(2e-2, 1e-1, 4), 4);
    INFO("slope " << scan.slope << " origin " << scan.origin_residual);
    CHECK(scan.origin_residual < 1e-9);
    CHECK(scan.slope >= nf.order + 1 - 0.5);
    CHECK(scan.slope <= nf.order + 1 + 1.5);
}
