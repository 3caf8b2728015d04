#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "effstab/estimates.hpp"

using namespace effstab;

namespace
{

// Constants in the range of the reference orbit at order 15.
constexpr double rho = 0.0155;
constexpr double gamma_ = 0.0245;
constexpr double tau = 2.0;
constexpr int N = 15;

struct Chain {
    double L, Q, eps2, A, C, a0;
};

Chain chain()
{
    Chain c{};
    c.L = linear_penalty(N, tau, gamma_);
    c.Q = quadratic_penalty(N, tau, rho, gamma_);
    c.eps2 = epsilon2(c.L, c.Q, N);
    c.A = 4 / (rho * gamma_);
    c.C = rho / (4 * c.eps2);
    c.a0 = threshold_radius(c.A, tau);
    return c;
}

} // namespace

TEST_CASE("epsilon2 closed forms", "[estimates]")
{
    CHECK(epsilon2(3.0, 7.0, 2) == Catch::Approx(3.0 / 7.0).epsilon(1e-15));
    CHECK(epsilon2(1.0, 1.0, 4) == Catch::Approx(1.0 / 9.0).epsilon(1e-15));
    double prev = epsilon2(0.5, 2.0, 2);
    for (int n = 3; n < 20; ++n) {
        const double e = epsilon2(0.5, 2.0, n);
        CHECK(e < prev);
        prev = e;
    }
    CHECK_THROWS(epsilon2(1.0, 1.0, 1));
    CHECK_THROWS(epsilon2(0.0, 1.0, 3));
}

TEST_CASE("penalties", "[estimates]")
{
    CHECK(linear_penalty(4, 2.0, 0.5) == 32.0);
    CHECK(quadratic_penalty(2, 1.0, 1.0, 1.0) == Catch::Approx(2 * 4 + 8 * 8).epsilon(1e-15));
}

TEST_CASE("N_opt at the threshold radius is 2 and grows as a shrinks", "[estimates]")
{
    const auto c = chain();
    CHECK(n_opt(c.a0, c.A, tau) == 2);
    int prev = 2;
    for (double f = 1.0; f > 1e-12; f /= 3) {
        const int n = n_opt(c.a0 * f, c.A, tau);
        CHECK(n >= prev);
        prev = n;
    }
    CHECK(prev > 2);
    CHECK_THROWS_AS(n_opt(c.a0 * 1.01, c.A, tau), EstimateError);
    CHECK(t_eff(c.a0, c.A, c.C, tau) == Catch::Approx(c.C * std::exp(2 * tau)).epsilon(1e-14));
}

TEST_CASE("N_opt matches the defining floor away from integers", "[estimates]")
{
    const auto c = chain();
    for (double target : {2.5, 3.7, 7.2, 11.9}) {
        // Radius for which (1/e)(1/(A a))^(1/tau) equals target.
        const double a = 1 / (c.A * std::pow(target * std::numbers::e, tau));
        CHECK(n_opt(a, c.A, tau) == static_cast<int>(std::floor(target)));
    }
}

TEST_CASE("confinement radius branches", "[estimates]")
{
    const auto c = chain();
    CHECK(confinement_radius(1.0, c.A, c.C, tau) == c.a0);
    CHECK(confinement_radius(0.5 * c.C, c.A, c.C, tau) == c.a0);
    // Between C and C e^tau the raw formula exceeds a0 and is capped there.
    CHECK(confinement_radius(c.C, c.A, c.C, tau) == c.a0);
    CHECK(confinement_radius(c.C * std::exp(tau) * 0.99, c.A, c.C, tau) == c.a0);
    // Past C e^tau: a = 1 / (A e^tau f^tau) with f = 1 + ln(T/C)/tau.
    const double T = c.C * 1e6;
    const double f = 1 + std::log(1e6) / tau;
    CHECK(confinement_radius(T, c.A, c.C, tau) == Catch::Approx(1 / (c.A * std::exp(tau) * std::pow(f, tau))).epsilon(1e-14));
    CHECK(n_opt(confinement_radius(T, c.A, c.C, tau), c.A, tau) == static_cast<int>(std::floor(f)));
    double prev = c.a0;
    for (double f = 10; f < 1e30; f *= 1e3) {
        const double a = confinement_radius(c.C * f, c.A, c.C, tau);
        CHECK(a < prev);
        prev = a;
    }
    CHECK_THROWS(confinement_radius(0.0, c.A, c.C, tau));
}

TEST_CASE("drift bound identity a / (2 eps_opt) = C exp(tau N_opt)", "[estimates]")
{
    const auto c = chain();
    for (double f : {1.0, 1e-3, 1e-7}) {
        const double a = c.a0 * f;
        const int n = n_opt(a, c.A, tau);
        const double e = drift_bound(c.eps2, a, rho, tau, n);
        CHECK(a / (2 * e) == Catch::Approx(c.C * std::exp(tau * n)).epsilon(1e-12));
    }
}

TEST_CASE("mission iterations and clamping", "[estimates]")
{
    CHECK(mission_iterations(10, 10) == 365);
    CHECK(mission_iterations(15, 10) == 548);
    CHECK(mission_iterations(50, 10) == 1826);
    const auto c = chain();
    const auto [n, clamped] = clamped_n_opt(c.a0 * 1e-12, c.A, tau, 5);
    CHECK(n == 5);
    CHECK(clamped);
}

TEST_CASE("root test on a single monomial and on a geometric jet", "[estimates]")
{
    JetVector<double> G(4, 4, 6);
    const auto &t = G.table();
    G[1][t.index(MultiIndex{0, 3, 0, 0})] = 8.0;
    const auto s = rho_root_test(G, 6);
    CHECK(std::isnan(s.rho_k[1]));
    CHECK(s.rho_k[2] == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(s.rho == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(std::isnan(s.running_min[0]));

    // Component 0 = sum_k q^k x0^k: rho_k = 1/q for every k.
    JetVector<double> H(4, 4, 6);
    const double q = 3.0;
    for (int k = 1; k <= 6; ++k) {
        H[0][H.table().index(MultiIndex{k, 0, 0, 0})] = std::pow(q, k);
    }
    const auto h = rho_root_test(H, 6);
    for (int k = 2; k <= 6; ++k) {
        CHECK(h.rho_k[static_cast<std::size_t>(k - 1)] == Catch::Approx(1 / q).epsilon(1e-14));
    }
    CHECK_THROWS(rho_root_test(JetVector<double>(4, 4, 6), 6));
}

TEST_CASE("stability constants chain and per-order rows", "[estimates]")
{
    JetVector<double> G(4, 4, 6);
    for (int k = 1; k <= 6; ++k) {
        G[0][G.table().index(MultiIndex{k, 0, 0, 0})] = std::pow(50.0, k);
    }
    std::vector<DivisorRecord> div;
    double running = 1e300;
    for (int k = 1; k <= 6; ++k) {
        DivisorRecord d;
        d.k = k;
        d.gamma_k = 0.5 / k;
        running = std::min(running, d.gamma_k);
        d.gamma_running = running;
        div.push_back(d);
    }
    const auto sc = stability_constants(G, div, 6, 2.0, {10, 15});
    CHECK(sc.rho == Catch::Approx(0.02).epsilon(1e-13));
    CHECK(sc.gamma == div[5].gamma_running);
    CHECK(sc.A * sc.rho * sc.gamma == Catch::Approx(4.0).epsilon(1e-15));
    CHECK(sc.C * 4 * sc.eps2 == Catch::Approx(sc.rho).epsilon(1e-15));
    CHECK(sc.per_order.size() == 5);
    for (const auto &r : sc.per_order) {
        CHECK(r.A == Catch::Approx(4 / (r.rho_min * r.gamma_min)).epsilon(1e-15));
        CHECK(r.N_opt == 2);
    }
    CHECK(sc.per_order.back().C == Catch::Approx(sc.C).epsilon(1e-15));
    REQUIRE(sc.missions.size() == 2);
    for (const auto &m : sc.missions) {
        if (m.below_C) {
            CHECK(m.a == sc.a0);
            CHECK(m.N_opt == 2);
        }
        CHECK(m.eps_opt == Catch::Approx(drift_bound(sc.eps2, m.a, sc.rho, 2.0, m.N_opt)).epsilon(1e-15));
    }
    CHECK_THROWS(stability_constants(G, div, 7, 2.0));
}
