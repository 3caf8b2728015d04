#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "effstab/cr3bp.hpp"
#include "effstab/jet.hpp"
#include "effstab/pipeline.hpp"
#include "orbit_fixture.hpp"

using namespace effstab;

TEST_CASE("mass ratio rejects values outside (0, 1/2)", "[cr3bp]")
{
    CHECK_THROWS_AS(MassRatio<double>(0.0), std::invalid_argument);
    CHECK_THROWS_AS(MassRatio<double>(0.5), std::invalid_argument);
    CHECK_NOTHROW(MassRatio<double>(earth_moon_mu));
}

TEST_CASE("vector field at the reference point is finite with vy < 0", "[cr3bp]")
{
    const auto s = test::reference_state6();
    const auto d = vector_field(s, test::em_mu());
    for (double v : d) {
        CHECK(std::isfinite(v));
    }
    CHECK(d[iy] < 0);
}

TEST_CASE("planar states have zero z-acceleration", "[cr3bp]")
{
    const State6<double> s{0.83, 0, 0, 0, 0.12, 0};
    CHECK(vector_field(s, test::em_mu())[ivz] == 0.0);
}

TEST_CASE("the L2 point is an equilibrium", "[cr3bp]")
{
    const double xl2 = l2_position(test::em_mu());
    CHECK(xl2 > 1.0);
    CHECK(xl2 < 1.2);
    const State6<double> s{xl2, 0, 0, 0, 0, 0};
    for (double v : vector_field(s, test::em_mu())) {
        CHECK(std::abs(v) < 1e-12);
    }
}

TEST_CASE("collision with a primary is reported", "[cr3bp]")
{
    const double mu = earth_moon_mu;
    const State6<double> at_moon{1 - mu + 1e-9, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(vector_field(at_moon, test::em_mu()), SingularityError);
    const State6<double> at_earth{-mu, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(vector_field(at_earth, test::em_mu()), SingularityError);
}

TEST_CASE("Jacobi constant of the reference state", "[cr3bp]")
{
    const double C = test::reference_jacobi();
    CHECK(std::abs(C - 3.0159) < 1e-4);
}

TEST_CASE("Jacobi constant with zero velocity is twice the potential", "[cr3bp]")
{
    const State6<double> s{0.5, 0.3, -0.1, 0, 0, 0};
    const double U = effective_potential(s[ix], s[iy], s[iz], test::em_mu());
    CHECK(jacobi_constant(s, test::em_mu()) == 2 * U);
}

TEST_CASE("vy recovered from the Jacobi constant", "[cr3bp]")
{
    const auto s = test::reference_state6();
    const double C = test::reference_jacobi();
    const double vy = vy_from_jacobi(s[ix], s[iz], 0.0, 0.0, C, test::em_mu(), -1);
    CHECK(std::abs(vy - s[ivy]) < 1e-10);

    // Zero radicand boundary.
    const double U = effective_potential(0.9, 0.0, 0.1, test::em_mu());
    CHECK(vy_from_jacobi(0.9, 0.1, 0.0, 0.0, 2 * U, test::em_mu(), 1) == 0.0);
    CHECK_THROWS_AS(vy_from_jacobi(0.9, 0.1, 0.0, 0.0, 2 * U + 1e-3, test::em_mu(), 1), DomainError);
    CHECK_THROWS_AS(vy_from_jacobi(0.9, 0.1, 0.0, 0.0, 2 * U, test::em_mu(), 0), std::invalid_argument);
}

TEST_CASE("vy jet linear part matches central differences", "[cr3bp]")
{
    const auto s = test::reference_state6();
    const double C = test::reference_jacobi() - 0.01;
    const std::array<double, 4> u{s[ix], s[iz], 0.01, -0.02};
    std::array<Jet<double>, 4> uj;
    for (int i = 0; i < 4; ++i) {
        uj[static_cast<std::size_t>(i)] = Jet<double>::variable(i, 4, 2) + u[static_cast<std::size_t>(i)];
    }
    const auto vj = vy_from_jacobi(uj[0], uj[1], uj[2], uj[3], C, test::em_mu(), -1);
    const double h = 1e-6;
    for (std::size_t k = 0; k < 4; ++k) {
        auto up = u, dn = u;
        up[k] += h;
        dn[k] -= h;
        const double fd = (vy_from_jacobi(up[0], up[1], up[2], up[3], C, test::em_mu(), -1) -
                           vy_from_jacobi(dn[0], dn[1], dn[2], dn[3], C, test::em_mu(), -1)) /
                          (2 * h);
        CHECK(std::abs(vj[1 + k] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
    CHECK(std::abs(vj.constant_term() - vy_from_jacobi(u[0], u[1], u[2], u[3], C, test::em_mu(), -1)) < 1e-15);
}

TEST_CASE("vector field respects the z-reflection and the time-reversal reflection", "[cr3bp]")
{
    // The Coriolis terms rule out a plain (y, vy) -> (-y, -vy) symmetry. The
    // field does commute with (z, vz) -> (-z, -vz), and the reflection
    // R(x, y, z, vx, vy, vz) = (x, -y, z, -vx, vy, -vz) reverses it: f(Rs) = -R f(s).
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-0.3, 0.3);
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(b)); };
    for (int t = 0; t < 20; ++t) {
        const State6<double> s{0.8 + d(rng), d(rng), d(rng), d(rng), d(rng), d(rng)};
        const auto f = vector_field(s, test::em_mu());

        State6<double> zs = s;
        zs[iz] = -s[iz];
        zs[ivz] = -s[ivz];
        const auto fz = vector_field(zs, test::em_mu());
        const std::array<double, 6> zsign{1, 1, -1, 1, 1, -1};

        State6<double> rs = s;
        rs[iy] = -s[iy];
        rs[ivx] = -s[ivx];
        rs[ivz] = -s[ivz];
        const auto fr = vector_field(rs, test::em_mu());
        const std::array<double, 6> rsign{-1, 1, -1, 1, -1, 1};
        for (std::size_t c = 0; c < 6; ++c) {
            CHECK(close(fz[c], zsign[c] * f[c]));
            CHECK(close(fr[c], rsign[c] * f[c]));
        }
    }
}

TEST_CASE("vector field on a jet state agrees with the scalar field", "[cr3bp]")
{
    const auto s = test::reference_state6();
    State6<Jet<double>> sj;
    for (int i = 0; i < 6; ++i) {
        sj[static_cast<std::size_t>(i)] = Jet<double>::variable(i, 6, 3) * 1e-3 + s[static_cast<std::size_t>(i)];
    }
    const auto fj = vector_field(sj, test::em_mu());
    const auto f = vector_field(s, test::em_mu());
    for (std::size_t c = 0; c < 6; ++c) {
        CHECK(std::abs(fj[c].constant_term() - f[c]) <= 1e-15 * std::max(1.0, std::abs(f[c])));
    }
}
