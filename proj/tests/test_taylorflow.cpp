#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numbers>

#include <boost/numeric/odeint.hpp>

#include "effstab/section.hpp"
#include "effstab/taylor_flow.hpp"
#include "orbit_fixture.hpp"

using namespace effstab;

namespace
{

State6<double> table1_orbit_start()
{
    const auto &fp = test::reference_fixed_point();
    return lift_to_state(fp.u0, fp.jacobi, test::em_mu());
}

} // namespace

TEST_CASE("time order follows the tolerance policy", "[taylorflow]")
{
    FlowSettings<double> set;
    CHECK(set.time_order() == 19);
    set.abs_tol = set.rel_tol = 1e-14;
    CHECK(set.time_order() == 17);
    set.abs_tol = -1;
    CHECK_THROWS_AS(set.validate(), std::invalid_argument);
}

TEST_CASE("step polynomial at tau = 0 is the initial state", "[taylorflow]")
{
    const auto s = table1_orbit_start();
    const auto [sp, next] = step(s, test::em_mu(), FlowSettings<double>{});
    CHECK(sp.eval(0.0) == s);
    CHECK(sp.h > 0);
    CHECK(next == sp.eval(sp.h));
}

TEST_CASE("accepted steps have decaying time coefficients", "[taylorflow]")
{
    const auto s = table1_orbit_start();
    const auto [sp, next] = step(s, test::em_mu(), FlowSettings<double>{});
    const int K = sp.order();
    for (std::size_t c = 0; c < 6; ++c) {
        double hk[3];
        for (int m = 0; m < 3; ++m) {
            const int k = K - 2 + m;
            hk[m] = std::abs(sp.series[c][static_cast<std::size_t>(k)]) * std::pow(std::abs(sp.h), k);
        }
        // Scaled by h^k the tail is well below the leading terms.
        CHECK(hk[2] < 1e-14);
        CHECK(hk[1] < 1e-14);
    }
}

TEST_CASE("two-body limit keeps a circular orbit circular", "[taylorflow]")
{
    const MassRatio<double> mu{1e-12};
    const double r = 0.3;
    const double n = std::pow(r, -1.5);
    // Rotating-frame velocity of an inertial circular orbit around the Earth.
    const State6<double> s{r - mu.value(), 0, 0, 0, n * r - r, 0};
    const double period = 2 * std::numbers::pi / (n - 1);
    const auto e = flow_to_time(s, period, mu);
    const double rad = std::hypot(e[ix] + mu.value(), e[iy], e[iz]);
    CHECK(std::abs(rad - r) < 1e-12);
    CHECK(std::abs(e[ix] - s[ix]) < 1e-10);
    CHECK(std::abs(e[iy]) < 1e-10);
}

TEST_CASE("reference orbit closes after one period", "[taylorflow]")
{
    const auto s = table1_orbit_start();
    const auto e = flow_to_time(s, test::reference_fixed_point().period, test::em_mu());
    for (std::size_t c = 0; c < 6; ++c) {
        CHECK(std::abs(e[c] - s[c]) < 1e-10);
    }
    CHECK(std::abs(jacobi_constant(e, test::em_mu()) - jacobi_constant(s, test::em_mu())) < 1e-11);
}

TEST_CASE("flow_to_time handles zero and reverse time", "[taylorflow]")
{
    const auto s = table1_orbit_start();
    CHECK(flow_to_time(s, 0.0, test::em_mu()) == s);
    const auto f = flow_to_time(s, 1.3, test::em_mu());
    const auto b = flow_to_time(f, -1.3, test::em_mu());
    for (std::size_t c = 0; c < 6; ++c) {
        CHECK(std::abs(b[c] - s[c]) < 1e-9);
    }
}

TEST_CASE("step underflow signals a singularity", "[taylorflow]")
{
    const auto s = table1_orbit_start();
    CHECK_THROWS_AS(step(s, test::em_mu(), FlowSettings<double>{}, 1e20), IntegrationError);
}

TEST_CASE("jet linear part equals the variational-equation STM", "[taylorflow]")
{
    namespace odeint = boost::numeric::odeint;
    const auto s = table1_orbit_start();
    const double t = 1.1;

    State6<Jet<double>> sj;
    for (int i = 0; i < 6; ++i) {
        sj[static_cast<std::size_t>(i)] = Jet<double>::variable(i, 6, 1) + s[static_cast<std::size_t>(i)];
    }
    const auto ej = flow_to_time(sj, t, test::em_mu());

    // Independent integration of x' = f(x), Phi' = Df(x) Phi with a
    // Runge-Kutta-Fehlberg 7(8) pair. Df comes from central differences of
    // the scalar field at step 1e-6 refined by Richardson extrapolation.
    using Vec = std::array<double, 42>;
    auto jac = [](const State6<double> &x) {
        std::array<std::array<double, 6>, 6> J{};
        for (std::size_t k = 0; k < 6; ++k) {
            auto d = [&](double h) {
                auto a = x, b = x;
                a[k] += h;
                b[k] -= h;
                const auto fa = vector_field(a, test::em_mu()), fb = vector_field(b, test::em_mu());
                std::array<double, 6> r{};
                for (std::size_t i = 0; i < 6; ++i) {
                    r[i] = (fa[i] - fb[i]) / (2 * h);
                }
                return r;
            };
            const auto d1 = d(2e-4), d2 = d(1e-4);
            for (std::size_t i = 0; i < 6; ++i) {
                J[i][k] = (4 * d2[i] - d1[i]) / 3;
            }
        }
        return J;
    };
    auto rhs = [&](const Vec &y, Vec &dy, double) {
        State6<double> x;
        std::copy(y.begin(), y.begin() + 6, x.begin());
        const auto f = vector_field(x, test::em_mu());
        std::copy(f.begin(), f.end(), dy.begin());
        const auto J = jac(x);
        for (std::size_t i = 0; i < 6; ++i) {
            for (std::size_t k = 0; k < 6; ++k) {
                double acc = 0;
                for (std::size_t m = 0; m < 6; ++m) {
                    acc += J[i][m] * y[6 + 6 * m + k];
                }
                dy[6 + 6 * i + k] = acc;
            }
        }
    };
    Vec y{};
    std::copy(s.begin(), s.end(), y.begin());
    for (std::size_t i = 0; i < 6; ++i) {
        y[6 + 7 * i] = 1.0;
    }
    odeint::integrate_adaptive(odeint::make_controlled(1e-13, 1e-13, odeint::runge_kutta_fehlberg78<Vec>()), rhs, y, 0.0, t, 1e-3);

    double scale = 0, err = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(std::abs(ej[i].constant_term() - y[i]) < 1e-10);
        for (std::size_t k = 0; k < 6; ++k) {
            scale = std::max(scale, std::abs(y[6 + 6 * i + k]));
            err = std::max(err, std::abs(ej[i][1 + k] - y[6 + 6 * i + k]));
        }
    }
    CHECK(err / scale < 1e-8);
}
