#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "effstab/diagonalize.hpp"
#include "effstab/errors.hpp"
#include "effstab/jet_vector.hpp"

namespace effstab
{

struct NormalFormSettings {
    double tau = 2.0;
    // Resonance threshold on the wrapped angle defect omega_i - <j, omega>.
    double res_tol = 1e-8;
    // Non-resonant coefficients left after a step, relative to the largest
    // degree-k coefficient before it.
    double nf_tol = 1e-10;
    // Imaginary part tolerated in the twist coefficients, relative to their size.
    double twist_reality_tol = 1e-6;
};

struct DivisorRecord {
    int k = 0;
    double gamma_k = 0;
    double gamma_running = 0;
    MultiIndex argmin_j;
    int argmin_i = 0;  // 0-based component
    // Number of (i, j) pairs attaining gamma_k to 1e-12 relative.
    int ties = 0;
};

// Signed angle defect omega_i - <j, omega> wrapped to (-pi, pi].
inline double angle_defect(const Spectrum &sp, std::size_t i, const std::uint8_t *j)
{
    double s = sp.omega[i];
    for (std::size_t v = 0; v < 4; ++v) {
        s -= static_cast<double>(j[v]) * sp.omega[v];
    }
    return std::remainder(s, 2 * std::numbers::pi);
}

inline double angle_defect(const Spectrum &sp, std::size_t i, const MultiIndex &j)
{
    std::array<std::uint8_t, 4> e{};
    for (std::size_t v = 0; v < 4; ++v) {
        e[v] = static_cast<std::uint8_t>(j[v]);
    }
    return angle_defect(sp, i, e.data());
}

inline bool classify_resonant(std::size_t i, const MultiIndex &j, const Spectrum &sp, double res_tol)
{
    return std::abs(angle_defect(sp, i, j)) < res_tol;
}

// j = e_i + sum_l m_l (e_{2l} + e_{2l+1}): the monomials z_i |z_1|^{2 m_1} |z_2|^{2 m_2}
// that are resonant for every spectrum.
inline bool is_trivially_resonant(std::size_t i, const std::uint8_t *j)
{
    std::array<int, 4> e{};
    for (std::size_t v = 0; v < 4; ++v) {
        e[v] = j[v];
    }
    if (e[i] == 0) {
        return false;
    }
    --e[i];
    return e[0] == e[1] && e[2] == e[3];
}

// |lambda_i - lambda^j| computed from the angle defect, 2 |sin(defect / 2)|.
inline double divisor_magnitude(const Spectrum &sp, std::size_t i, const std::uint8_t *j)
{
    return 2.0 * std::abs(std::sin(angle_defect(sp, i, j) / 2.0));
}

// gamma_k = min over non-resonant (i, |j| = k) of |lambda_i - lambda^j| k^tau.
// Scan order: j in the table order of degree k, then i = 0..3; the first pair
// that attains the minimum (to 1e-12 relative) is reported.
inline DivisorRecord divisor_table(const Spectrum &sp, int k, double tau, double res_tol)
{
    if (k < 1) {
        throw std::invalid_argument("divisor_table: degree must be >= 1");
    }
    const auto t = MonomialTable::get(4, k);
    const double weight = std::pow(static_cast<double>(k), tau);
    DivisorRecord rec;
    rec.k = k;
    bool found = false;
    for (std::size_t idx = t->degree_begin(k); idx < t->degree_end(k); ++idx) {
        const auto *j = t->exponents(idx);
        for (std::size_t i = 0; i < 4; ++i) {
            if (std::abs(angle_defect(sp, i, j)) < res_tol) {
                continue;
            }
            const double g = divisor_magnitude(sp, i, j) * weight;
            if (!found || g < rec.gamma_k * (1 - 1e-12)) {
                found = true;
                rec.gamma_k = g;
                rec.argmin_j = t->multi_index(idx);
                rec.argmin_i = static_cast<int>(i);
            }
        }
    }
    if (!found) {
        throw NormalizationError("divisor_table: every pair of degree " + std::to_string(k) + " is resonant");
    }
    for (std::size_t idx = t->degree_begin(k); idx < t->degree_end(k); ++idx) {
        const auto *j = t->exponents(idx);
        for (std::size_t i = 0; i < 4; ++i) {
            if (std::abs(angle_defect(sp, i, j)) >= res_tol && std::abs(divisor_magnitude(sp, i, j) * weight - rec.gamma_k) <= 1e-12 * rec.gamma_k) {
                ++rec.ties;
            }
        }
    }
    return rec;
}

// Rows k = 1..N with the running minimum filled in.
inline std::vector<DivisorRecord> divisor_records(const Spectrum &sp, int N, double tau, double res_tol)
{
    std::vector<DivisorRecord> out;
    double running = 0;
    for (int k = 1; k <= N; ++k) {
        auto r = divisor_table(sp, k, tau, res_tol);
        running = (k == 1) ? r.gamma_k : std::min(running, r.gamma_k);
        r.gamma_running = running;
        out.push_back(std::move(r));
    }
    return out;
}

struct ResonantTerm {
    int i = 0;  // 0-based component
    MultiIndex j;
    bool trivial = true;
};

// Omega_l(I) = omega_l + sum beta_{l,m} I^m for the two degrees of freedom,
// stored as real 2-variable jets in the actions I = (|z1|^2, |z3|^2).
struct Twist {
    int max_degree = 0;
    std::array<Jet<double>, 2> omega;
    double reality_defect = 0;
};

struct NormalForm {
    JetVector<cplx> F;
    std::vector<JetVector<cplx>> generators;        // chi_k, k = 2..N
    std::vector<JetVector<cplx>> inverse_steps;     // c_k^-1, k = 2..N
    JetVector<cplx> transform;                      // c_2 o ... o c_N
    JetVector<cplx> inverse;                        // c_N^-1 o ... o c_2^-1
    std::vector<DivisorRecord> divisors;            // k = 1..N
    std::vector<ResonantTerm> resonant_set;
    Twist twist;
    Spectrum spectrum;
    NormalFormSettings settings;
    int order = 0;
    // Largest non-resonant coefficient left in F (absolute) and the largest
    // change any step made to the degrees it had already normalised.
    double max_nonresonant = 0;
    double max_lower_degree_change = 0;
    // Constant term of F1 dropped before normalising (the fixed-point residual)
    // and the largest change made when its linear part was set to diag(lambda).
    double dropped_constant = 0;
    double dropped_linear = 0;
};

struct NormalizeStepResult {
    JetVector<cplx> F;
    JetVector<cplx> chi;
    JetVector<cplx> inverse_c;
    double max_nonresonant_after = 0;
    double lower_degree_change = 0;
};

// One step of the homological equation at degree k:
// b_{j,i} = R_{j,i} / (lambda_i - lambda^j) for non-resonant pairs, 0 otherwise,
// then F_next = c_k^-1 o F_prev o c_k with c_k = s - chi_k.
inline NormalizeStepResult normalize_step(const JetVector<cplx> &F_prev, int k, const Spectrum &sp, const NormalFormSettings &set)
{
    const auto &t = F_prev.table();
    const int N = F_prev.order();
    if (k < 2 || k > N) {
        throw std::invalid_argument("normalize_step: degree out of range");
    }
    const double floor = 1e2 * std::numeric_limits<double>::epsilon();
    NormalizeStepResult out{JetVector<cplx>(), JetVector<cplx>(4, 4, N), JetVector<cplx>(), 0, 0};
    double scale = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t idx = t.degree_begin(k); idx < t.degree_end(k); ++idx) {
            scale = std::max(scale, std::abs(F_prev[i][idx]));
            const cplx R = F_prev[i][idx];
            if (R == cplx(0)) {
                continue;
            }
            const auto *j = t.exponents(idx);
            const double defect = angle_defect(sp, i, j);
            if (std::abs(defect) < set.res_tol) {
                continue;
            }
            double jw = 0;
            for (std::size_t v = 0; v < 4; ++v) {
                jw += static_cast<double>(j[v]) * sp.omega[v];
            }
            const cplx div = sp.eigenvalues[i] - std::polar(1.0, jw);
            if (std::abs(div) < floor) {
                throw NormalizationError("normalize_step: small divisor below the hard floor at degree " + std::to_string(k));
            }
            out.chi[i][idx] = R / div;
        }
    }

    if (out.chi.max_nonzero_degree() < 0) {
        out.F = F_prev;
        out.inverse_c = JetVector<cplx>::identity(4, N);
        return out;
    }
    const JetVector<cplx> c = JetVector<cplx>::identity(4, N) - out.chi;
    out.inverse_c = invert_near_identity(c);
    out.F = compose(out.inverse_c, compose(F_prev, c));

    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t idx = t.degree_begin(0); idx < t.degree_end(k - 1); ++idx) {
            out.lower_degree_change = std::max(out.lower_degree_change, std::abs(out.F[i][idx] - F_prev[i][idx]));
        }
        for (std::size_t idx = t.degree_begin(k); idx < t.degree_end(k); ++idx) {
            if (std::abs(angle_defect(sp, i, t.exponents(idx))) >= set.res_tol) {
                out.max_nonresonant_after = std::max(out.max_nonresonant_after, std::abs(out.F[i][idx]));
            }
        }
    }
    if (out.max_nonresonant_after > set.nf_tol * scale) {
        throw NormalizationError("normalize_step: degree " + std::to_string(k) + " not normalised (residual " +
                                 to_decimal(out.max_nonresonant_after) + ")");
    }
    return out;
}

// Twist coefficients from the retained z_i |z_1|^{2 m_1} |z_2|^{2 m_2} terms:
// z_i' = z_i (lambda_i + sum a_{i,m} I^m) = z_i exp(i Omega_i(I)), so
// Omega_i = omega_i - i log(1 + sum (a_{i,m} / lambda_i) I^m).
inline Twist extract_twist(const NormalForm &nf)
{
    const auto &t = nf.F.table();
    const int M = (nf.order - 1) / 2;
    Twist tw;
    tw.max_degree = M;
    for (const auto &r : nf.resonant_set) {
        if (!r.trivial) {
            throw NormalizationError("twist: non-trivial resonant terms retained, the twist form does not apply");
        }
    }
    for (std::size_t l = 0; l < 2; ++l) {
        const std::size_t i = 2 * l;
        if (M == 0) {
            tw.omega[l] = Jet<double>::constant(nf.spectrum.omega[i], 2, 0);
            continue;
        }
        Jet<cplx> A(2, M);
        for (std::size_t idx = t.degree_begin(3); idx < t.size(); ++idx) {
            const auto *j = t.exponents(idx);
            if (!is_trivially_resonant(i, j)) {
                continue;
            }
            const int m1 = std::min(j[0], j[1]);
            const int m2 = std::min(j[2], j[3]);
            if (m1 + m2 > M) {
                continue;
            }
            A.set_coeff(MultiIndex{m1, m2}, nf.F[i][idx] / nf.spectrum.eigenvalues[i]);
        }
        A[0] = cplx(1);
        Jet<cplx> Om = log(A) * cplx(0, -1);
        Om[0] += nf.spectrum.omega[i];
        Jet<double> beta(2, M);
        double big = 0, imag = 0;
        for (std::size_t k = 0; k < Om.size(); ++k) {
            beta[k] = Om[k].real();
            big = std::max(big, std::abs(Om[k]));
            imag = std::max(imag, std::abs(Om[k].imag()));
        }
        tw.reality_defect = std::max(tw.reality_defect, big > 0 ? imag / big : 0.0);
        tw.omega[l] = std::move(beta);
    }
    if (tw.reality_defect > nf.settings.twist_reality_tol) {
        throw NormalizationError("twist: coefficients are not real (defect " + to_decimal(tw.reality_defect) + ")");
    }
    return tw;
}

// Frequencies (Omega_1, Omega_2) at actions I.
inline std::array<double, 2> twist_frequencies(const NormalForm &nf, const std::array<double, 2> &I)
{
    const std::vector<double> p{I[0], I[1]};
    return {eval(nf.twist.omega[0], p), eval(nf.twist.omega[1], p)};
}

// The integrable part z_i' = z_i exp(+-i Omega(I)).
inline std::array<cplx, 4> twist_map(const NormalForm &nf, const std::array<cplx, 4> &z)
{
    const std::array<double, 2> I{std::norm(z[0]), std::norm(z[2])};
    const auto Om = twist_frequencies(nf, I);
    return {z[0] * std::polar(1.0, Om[0]), z[1] * std::polar(1.0, -Om[0]), z[2] * std::polar(1.0, Om[1]), z[3] * std::polar(1.0, -Om[1])};
}

// Folds normalize_step over k = 2..N and assembles transforms, divisor rows,
// the retained set and the twist.
inline NormalForm normalize(const JetVector<cplx> &F1, const Spectrum &sp, const NormalFormSettings &set = {})
{
    NormalForm nf;
    nf.order = F1.order();
    nf.spectrum = sp;
    nf.settings = set;
    nf.F = F1;
    // The expansion point is a fixed point only up to the Newton residual, and
    // the computed linear part is diagonal with unimodular entries only up to the
    // integration error. The homological equation assumes both exactly, so the
    // defects are recorded and removed here.
    for (std::size_t i = 0; i < 4; ++i) {
        nf.dropped_constant = std::max(nf.dropped_constant, std::abs(nf.F[i][0]));
        nf.F[i][0] = cplx(0);
        for (std::size_t v = 0; v < 4; ++v) {
            const std::size_t idx = 1 + v;
            const cplx target = (v == i) ? sp.eigenvalues[i] : cplx(0);
            nf.dropped_linear = std::max(nf.dropped_linear, std::abs(nf.F[i][idx] - target));
            nf.F[i][idx] = target;
        }
    }
    const int N = nf.order;
    nf.transform = JetVector<cplx>::identity(4, N);
    nf.inverse = JetVector<cplx>::identity(4, N);
    nf.divisors = divisor_records(sp, N, set.tau, set.res_tol);
    for (int k = 2; k <= N; ++k) {
        auto step = normalize_step(nf.F, k, sp, set);
        const JetVector<cplx> c = JetVector<cplx>::identity(4, N) - step.chi;
        nf.transform = compose(nf.transform, c);
        nf.inverse = compose(step.inverse_c, nf.inverse);
        nf.max_lower_degree_change = std::max(nf.max_lower_degree_change, step.lower_degree_change);
        nf.F = std::move(step.F);
        nf.generators.push_back(std::move(step.chi));
        nf.inverse_steps.push_back(std::move(step.inverse_c));
    }
    const auto &t = nf.F.table();
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t idx = t.degree_begin(2); idx < t.size(); ++idx) {
            const auto *j = t.exponents(idx);
            if (std::abs(angle_defect(sp, i, j)) < set.res_tol) {
                nf.resonant_set.push_back({static_cast<int>(i), t.multi_index(idx), is_trivially_resonant(i, j)});
            } else {
                nf.max_nonresonant = std::max(nf.max_nonresonant, std::abs(nf.F[i][idx]));
            }
        }
    }
    nf.twist = extract_twist(nf);
    return nf;
}

// Normal-form coordinates -> real section displacement s = (pV) c(z).
inline std::array<double, 4> nf_to_section(const NormalForm &nf, const std::array<cplx, 4> &z)
{
    const auto w = eval(nf.transform, std::vector<cplx>(z.begin(), z.end()));
    return diagonal_to_section(nf.spectrum, {w[0], w[1], w[2], w[3]});
}

// Real section displacement -> normal-form coordinates z = c^-1((pV)^-1 s).
inline std::array<cplx, 4> section_to_nf(const NormalForm &nf, const std::array<double, 4> &s)
{
    std::vector<cplx> w(4);
    for (int i = 0; i < 4; ++i) {
        cplx acc = 0;
        for (int j = 0; j < 4; ++j) {
            acc += nf.spectrum.V_inv(i, j) * s[static_cast<std::size_t>(j)];
        }
        w[static_cast<std::size_t>(i)] = acc;
    }
    const auto z = eval(nf.inverse, w);
    return {z[0], z[1], z[2], z[3]};
}

} // namespace effstab
