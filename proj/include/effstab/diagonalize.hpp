#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "effstab/errors.hpp"
#include "effstab/jet_vector.hpp"
#include "effstab/section.hpp"

namespace effstab
{

using cplx = std::complex<double>;
using Matrix4c = Eigen::Matrix<cplx, 4, 4>;
using Matrix4r = Eigen::Matrix<double, 4, 4>;

// Index of the complex-conjugate partner of a diagonal coordinate. Coordinates
// come in adjacent pairs (z1, z2 = conj z1), (z3, z4 = conj z3).
constexpr std::size_t conjugate_partner(std::size_t i)
{
    return i ^ 1u;
}

// Multi-index seen from the conjugate coordinates: (j2, j1, j4, j3).
inline MultiIndex conjugate_exponents(const MultiIndex &j)
{
    std::vector<int> e(j.size());
    for (std::size_t v = 0; v < j.size(); ++v) {
        e[v] = j[conjugate_partner(v)];
    }
    return MultiIndex(std::move(e));
}

// Eigen-structure of the linearised return map. Ordering is
// (lambda1, conj lambda1, lambda2, conj lambda2) with lambda_l = exp(i alpha_l),
// alpha1 > alpha2 > 0.
struct Spectrum {
    std::array<double, 2> angles{};
    std::array<cplx, 4> eigenvalues{};
    // Signed angle of each eigenvalue: (alpha1, -alpha1, alpha2, -alpha2).
    std::array<double, 4> omega{};
    // Moduli of the eigenvalues as returned by the solver, before they are
    // put back on the unit circle.
    std::array<double, 4> moduli{};
    Matrix4c V;      // eigenvector columns, unit infinity norm
    double p_scale = 1;
    Matrix4c V_inv;  // inverse of p_scale * V

    Matrix4c scaled_V() const
    {
        return V * cplx(p_scale);
    }
};

// Thresholds for recognising an elliptic spectrum.
struct SpectrumSettings {
    double unit_circle_tol = 1e-6;
    double min_imag = 1e-8;
    double res_tol = 1e-8;
};

// Angles in [0, pi] of a 4x4 symplectic matrix from its characteristic
// polynomial. With mu = lambda + 1/lambda = 2 cos(alpha) it reduces to
// mu^2 - a mu + (b - 2) = 0, a = trace, b = sum of principal 2x2 minors.
// Works in any real field, so it gives extended-precision angles.
template <typename R>
std::array<R, 2> symplectic_angles(const std::array<std::array<R, 4>, 4> &M)
{
    using std::abs;
    using std::acos;
    using std::sqrt;
    R a(0), b(0);
    for (int i = 0; i < 4; ++i) {
        a += M[i][i];
        for (int j = i + 1; j < 4; ++j) {
            b += M[i][i] * M[j][j] - M[i][j] * M[j][i];
        }
    }
    const R disc = a * a - R(4) * (b - R(2));
    if (disc < R(0)) {
        throw SpectrumError("symplectic_angles: Krein collision (complex mu)");
    }
    const R sq = sqrt(disc);
    const R m1 = (a - sq) / R(2), m2 = (a + sq) / R(2);
    if (!(abs(m1) < R(2) && abs(m2) < R(2))) {
        throw SpectrumError("symplectic_angles: spectrum is not elliptic");
    }
    return {acos(m1 / R(2)), acos(m2 / R(2))};
}

inline Matrix4r to_eigen(const std::array<std::array<double, 4>, 4> &M)
{
    Matrix4r E;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            E(i, j) = M[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return E;
}

// Eigen-decomposition of G1 with the pair ordering above. The scaling p_scale
// is left at 1; fix_scale chooses it from the quadratic terms.
inline Spectrum spectrum_of(const Matrix4r &G1, const SpectrumSettings &set = {})
{
    Eigen::EigenSolver<Matrix4r> es(G1);
    if (es.info() != Eigen::Success) {
        throw SpectrumError("spectrum_of: eigen-decomposition failed");
    }
    const auto vals = es.eigenvalues();
    const auto vecs = es.eigenvectors();
    std::vector<int> upper;
    for (int i = 0; i < 4; ++i) {
        const cplx l = vals(i);
        if (std::abs(std::abs(l) - 1.0) > set.unit_circle_tol) {
            throw SpectrumError("spectrum_of: eigenvalue off the unit circle (|lambda| = " + to_decimal(std::abs(l)) + "), orbit is not elliptic");
        }
        if (std::abs(l.imag()) < set.min_imag) {
            throw SpectrumError("spectrum_of: real eigenvalue, orbit is parabolic or hyperbolic");
        }
        if (l.imag() > 0) {
            upper.push_back(i);
        }
    }
    if (upper.size() != 2) {
        throw SpectrumError("spectrum_of: eigenvalues do not form two conjugate pairs");
    }
    std::sort(upper.begin(), upper.end(), [&](int a, int b) { return std::arg(vals(a)) > std::arg(vals(b)); });

    Spectrum sp;
    for (std::size_t l = 0; l < 2; ++l) {
        const int col = upper[l];
        // Renormalise the eigenvalue onto the circle; its angle is what matters.
        const double alpha = std::arg(vals(col));
        if (alpha < set.res_tol || std::numbers::pi - alpha < set.res_tol) {
            throw SpectrumError("spectrum_of: eigenvalue angle too close to 0 or pi");
        }
        sp.angles[l] = alpha;
        const cplx lam = std::polar(1.0, alpha);
        sp.eigenvalues[2 * l] = lam;
        sp.eigenvalues[2 * l + 1] = std::conj(lam);
        sp.omega[2 * l] = alpha;
        sp.omega[2 * l + 1] = -alpha;
        sp.moduli[2 * l] = sp.moduli[2 * l + 1] = std::abs(vals(col));
        Eigen::Vector4cd v = vecs.col(col);
        int imax = 0;
        for (int r = 1; r < 4; ++r) {
            if (std::abs(v(r)) > std::abs(v(imax))) {
                imax = r;
            }
        }
        v /= v(imax);
        sp.V.col(static_cast<int>(2 * l)) = v;
        sp.V.col(static_cast<int>(2 * l + 1)) = v.conjugate();
    }
    if (std::abs(sp.angles[0] - sp.angles[1]) < set.res_tol) {
        throw SpectrumError("spectrum_of: 1:1 resonance between the two modes");
    }
    sp.V_inv = sp.V.inverse();
    return sp;
}

inline Spectrum spectrum_of(const std::array<std::array<double, 4>, 4> &G1, const SpectrumSettings &set = {})
{
    return spectrum_of(to_eigen(G1), set);
}

// Replaces the angles (and the unimodular eigenvalues) by more accurate ones,
// e.g. from an extended-precision monodromy. The eigenvectors are kept. The
// new angles must be close to the current ones, in either order.
inline void refine_angles(Spectrum &sp, std::array<double, 2> angles, double match_tol = 1e-6)
{
    if (angles[0] < angles[1]) {
        std::swap(angles[0], angles[1]);
    }
    for (std::size_t l = 0; l < 2; ++l) {
        if (std::abs(angles[l] - sp.angles[l]) > match_tol) {
            throw SpectrumError("refine_angles: refined angle " + to_decimal(angles[l]) + " does not match " + to_decimal(sp.angles[l]));
        }
        sp.angles[l] = angles[l];
        sp.eigenvalues[2 * l] = std::polar(1.0, angles[l]);
        sp.eigenvalues[2 * l + 1] = std::polar(1.0, -angles[l]);
        sp.omega[2 * l] = angles[l];
        sp.omega[2 * l + 1] = -angles[l];
    }
}

// ||(pV)^-1 G1 (pV) - Lambda||_inf
inline double diagonalization_residual(const Matrix4r &G1, const Spectrum &sp)
{
    const Matrix4c D = sp.V_inv * G1.cast<cplx>() * sp.scaled_V();
    double m = 0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const cplx target = (i == j) ? sp.eigenvalues[static_cast<std::size_t>(i)] : cplx(0);
            m = std::max(m, std::abs(D(i, j) - target));
        }
    }
    return m;
}

inline std::vector<std::vector<cplx>> to_rows(const Matrix4c &M)
{
    std::vector<std::vector<cplx>> r(4, std::vector<cplx>(4));
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = M(i, j);
        }
    }
    return r;
}

namespace detail
{

inline JetVector<cplx> conjugate_by_linear(const JetVector<cplx> &G, const Matrix4c &W)
{
    const Matrix4c Winv = W.inverse();
    return apply_matrix(to_rows(Winv), compose_linear(G, to_rows(W)));
}

} // namespace detail

// Chooses p_scale so that the degree-2 norm of F1 at radius 1 equals
// `factor` (1 by default) and refreshes V_inv. Only the quadratic slice of G
// is needed for this.
inline void fix_scale(const JetVector<double> &G, Spectrum &sp, double factor = 1.0)
{
    const JetVector<cplx> F_unit = detail::conjugate_by_linear(G.truncated(2).cast<cplx>(), sp.V);
    const double n2 = slice_norm(F_unit, 2, 1.0);
    if (!(n2 > 0)) {
        throw SpectrumError("fix_scale: map has no quadratic terms to fix the scale");
    }
    sp.p_scale = factor / n2;
    sp.V_inv = sp.scaled_V().inverse();
}

// F1 = (pV)^-1 G((pV) z) with the scale currently stored in sp.
inline JetVector<cplx> linear_normalize(const JetVector<double> &G, const Spectrum &sp)
{
    return apply_matrix(to_rows(sp.V_inv), compose_linear(G.cast<cplx>(), to_rows(sp.scaled_V())));
}

// Largest violation of F_i[j] = conj(F_partner(i)[conjugate_exponents(j)]).
inline double reality_defect(const JetVector<cplx> &F)
{
    const auto &t = F.table();
    double m = 0;
    for (std::size_t i = 0; i < F.dim(); ++i) {
        const auto &a = F[i];
        const auto &b = F[conjugate_partner(i)];
        for (std::size_t k = 0; k < a.size(); ++k) {
            const auto kk = t.index(conjugate_exponents(t.multi_index(k)));
            m = std::max(m, std::abs(a[k] - std::conj(b[kk])));
        }
    }
    return m;
}

// Real section displacement from diagonal coordinates of conjugate pairs.
inline std::array<double, 4> diagonal_to_section(const Spectrum &sp, const std::array<cplx, 4> &z)
{
    const Matrix4c W = sp.scaled_V();
    std::array<double, 4> s{};
    for (int i = 0; i < 4; ++i) {
        cplx acc = 0;
        for (int j = 0; j < 4; ++j) {
            acc += W(i, j) * z[static_cast<std::size_t>(j)];
        }
        s[static_cast<std::size_t>(i)] = acc.real();
    }
    return s;
}

} // namespace effstab
