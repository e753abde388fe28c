#include "ellcomm/tyurin.hpp"

#include "ellcomm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ellcomm {

namespace {

// ζ, ℘, ℘' with pole hits reported as a degenerate state naming the quantity.
cplx zeta_at(const Torus &t, cplx arg, const char *what)
{
    try {
        return zeta_w(t, arg);
    } catch (const PoleProximity &) {
        throw DegenerateState(std::string("zeta argument ") + what + " hits the lattice");
    }
}

cplx wp_at(const Torus &t, cplx arg, const char *what)
{
    try {
        return wp(t, arg);
    } catch (const PoleProximity &) {
        throw DegenerateState(std::string("wp argument ") + what + " hits the lattice");
    }
}

cplx wp_prime_at(const Torus &t, cplx arg, const char *what)
{
    try {
        return wp_prime(t, arg);
    } catch (const PoleProximity &) {
        throw DegenerateState(std::string("wp' argument ") + what + " hits the lattice");
    }
}

cplx F_at(const Torus &t, cplx u, cplx v, const char *what)
{
    try {
        return F(t, u, v);
    } catch (const PoleProximity &) {
        throw DegenerateState(std::string("F(") + what + ") is singular");
    }
}

std::size_t offset(long n, long first, std::size_t size, const char *what)
{
    if (n < first || n >= first + static_cast<long>(size)) {
        throw std::out_of_range(std::string(what) + " index " + std::to_string(n) + " outside supplied range");
    }
    return static_cast<std::size_t>(n - first);
}

} // namespace

cplx residue_weight(const TyurinState &s)
{
    const cplx d = s.a1 - s.a2;
    if (std::abs(d) <= 1e-12 * std::max(1.0, std::abs(s.a1) + std::abs(s.a2))) {
        throw DegenerateState("a1 = a2: residue directions coincide");
    }
    return s.a1 * s.a2 / d;
}

cplx next_c(const Torus &t, const TyurinState &s, cplx gamma_next)
{
    const cplx K = residue_weight(s);
    return K * (zeta_at(t, gamma_next - s.gamma, "gamma_{n+1} - gamma_n") - zeta_at(t, gamma_next + s.gamma, "gamma_{n+1} + gamma_n")
                + zeta_at(t, s.gamma + s.c_const, "gamma_n + c") + zeta_at(t, s.gamma - s.c_const, "gamma_n - c"));
}

ChiValues chi_functions(const Torus &t, const TyurinState &s, cplx c_next, cplx v_next, cplx z)
{
    const cplx K = residue_weight(s);
    const cplx d = s.a1 - s.a2;
    const cplx A = s.a2 / d;
    const cplx B = -s.a1 / d;
    const cplx g1 = s.pole1();
    const cplx g2 = s.pole2();
    const cplx h1 = zeta_w(t, z - g1) + zeta_at(t, g1, "gamma^1");
    const cplx h2 = zeta_w(t, z - g2) + zeta_at(t, g2, "gamma^2");
    return {-c_next + K * (h1 - h2), zeta_w(t, z) - v_next + A * h1 + B * h2};
}

cplx chi1_via_next_gamma(const Torus &t, const TyurinState &s, cplx gamma_next, cplx z)
{
    const cplx K = residue_weight(s);
    return K * (zeta_w(t, z - s.pole1()) - zeta_w(t, z - s.pole2()) - zeta_at(t, gamma_next - s.gamma, "gamma_{n+1} - gamma_n")
                + zeta_at(t, gamma_next + s.gamma, "gamma_{n+1} + gamma_n"));
}

StepResult step_general(const Torus &t, const TyurinState &s, cplx gamma_next, cplx v_next)
{
    const cplx d = s.a1 - s.a2;
    residue_weight(s);
    const cplx A = s.a2 / d;
    const cplx B = -s.a1 / d;
    const cplx c = s.c_const;

    StepResult r;
    r.c_next = next_c(t, s, gamma_next);

    const cplx z_minus = zeta_at(t, gamma_next - s.gamma, "gamma_{n+1} - gamma_n");
    const cplx z_plus = zeta_at(t, gamma_next + s.gamma, "gamma_{n+1} + gamma_n");
    const cplx zp = zeta_at(t, s.gamma + c, "gamma_n + c");
    const cplx zm = zeta_at(t, s.gamma - c, "gamma_n - c");
    r.next.gamma = gamma_next;
    r.next.c_const = c;
    r.next.a1 = v_next - zeta_at(t, gamma_next + c, "gamma_{n+1} + c") - A * (z_minus + zp) - B * (z_plus - zm);
    r.next.a2 = v_next + zeta_at(t, gamma_next - c, "gamma_{n+1} - c") + A * (z_plus - zp) + B * (z_minus + zm);

    // Independent checks through the transfer-matrix entries themselves.
    const cplx next_poles[2] = {r.next.pole1(), r.next.pole2()};
    const cplx next_a[2] = {r.next.a1, r.next.a2};
    const double scale = std::max({1.0, std::abs(r.c_next), std::abs(residue_weight(s))});
    for (int k = 0; k < 2; ++k) {
        const auto chi = chi_functions(t, s, r.c_next, v_next, next_poles[k]);
        r.chi1_zero_residual = std::max(r.chi1_zero_residual, std::abs(chi.chi1) / scale);
        const double a_scale = std::max(1.0, std::abs(next_a[k]));
        r.a_two_route_residual = std::max(r.a_two_route_residual, std::abs(next_a[k] + chi.chi2) / a_scale);
    }
    return r;
}

Xi xi_coefficients(const Torus &t, const TyurinState &s, cplx c_next)
{
    const cplx K = residue_weight(s);
    if (std::abs(c_next) <= 1e-14 * std::max(1.0, std::abs(K))) {
        throw DegenerateState("c_{n+1} vanishes; Taylor data of chi1 undefined");
    }
    const cplx d = s.a1 - s.a2;
    const cplx A = s.a2 / d;
    const cplx B = -s.a1 / d;
    // Coefficients of z and z² in ζ(z-γ)+ζ(γ): -℘(γ), ℘'(γ)/2.
    const cplx p1 = wp_at(t, s.pole1(), "gamma^1");
    const cplx p2 = wp_at(t, s.pole2(), "gamma^2");
    const cplx dp1 = wp_prime_at(t, s.pole1(), "gamma^1");
    const cplx dp2 = wp_prime_at(t, s.pole2(), "gamma^2");
    Xi x;
    x.xi11 = K * (p1 - p2) / c_next;
    x.xi12 = -K * (dp1 - dp2) / (2.0 * c_next);
    x.xi21 = -A * p1 - B * p2;
    return x;
}

BandedOperator build_L2(long n_min, const std::vector<cplx> &v, const std::vector<cplx> &c)
{
    if (v.size() != c.size() || v.empty()) {
        throw WindowUnderflow("L2 needs equal, nonempty v and c sequences");
    }
    const long n_max = n_min + static_cast<long>(v.size()) - 1;
    BandedOperator L(n_min, n_max, 1, 1);
    for (long n = n_min; n <= n_max; ++n) {
        const auto k = static_cast<std::size_t>(n - n_min);
        L.set(n, 1, 1.0);
        L.set(n, 0, v[k]);
        L.set(n, -1, c[k]);
    }
    return L;
}

GeneralRun run_general(const Torus &t, long n0, const std::vector<cplx> &gamma, const std::vector<cplx> &v,
                       cplx c_const, cplx a1_0, cplx a2_0)
{
    if (gamma.size() < 2 || v.size() + 1 != gamma.size()) {
        throw std::invalid_argument("run_general: need gamma on n0..n0+k and v on n0+1..n0+k");
    }
    GeneralRun run;
    run.n0 = n0;
    run.states.push_back({gamma[0], a1_0, a2_0, c_const});
    for (std::size_t k = 0; k + 1 < gamma.size(); ++k) {
        const TyurinState &s = run.states.back();
        const StepResult r = step_general(t, s, gamma[k + 1], v[k]);
        run.c.push_back(r.c_next);
        run.v.push_back(v[k]);
        run.xi.push_back(xi_coefficients(t, s, r.c_next));
        run.max_chi1_zero_residual = std::max(run.max_chi1_zero_residual, r.chi1_zero_residual);
        run.max_a_two_route_residual = std::max(run.max_a_two_route_residual, r.a_two_route_residual);
        run.states.push_back(r.next);
    }
    return run;
}

BandedOperator general_L2(const GeneralRun &run)
{
    return build_L2(run.n0 + 1, run.v, run.c);
}

BandedOperator general_L4(const GeneralRun &run)
{
    const BandedOperator L2 = general_L2(run);
    const long lo = run.n0 + 2;
    const long hi = run.last() - 1;
    if (hi < lo) {
        throw WindowUnderflow("general L4 needs at least four sites");
    }
    const BandedOperator sq = compose(L2, L2).restricted(lo, hi);
    auto xi = [&](long n) { return run.xi[static_cast<std::size_t>(n - run.n0)]; };
    BandedOperator corr(lo, hi, 1, 1);
    for (long n = lo; n <= hi; ++n) {
        const Xi a = xi(n - 1);
        const Xi b = xi(n - 2);
        const cplx vn = L2.coeff(n, 0);
        const cplx cn = L2.coeff(n, -1);
        const cplx sum11 = a.xi11 + b.xi11;
        const cplx u = vn * (a.xi11 - b.xi11) + a.xi12 + b.xi12 - b.xi11 * b.xi11 - (a.xi21 + b.xi21);
        corr.set(n, 1, -sum11);
        corr.set(n, 0, u);
        corr.set(n, -1, cn * sum11);
    }
    return add(sq, corr);
}

cplx SymmetricParams::gamma_at(long n) const
{
    return gamma[offset(n, n_first, gamma.size(), "gamma")];
}

cplx SymmetricParams::s_at(long n) const
{
    return s[offset(n, n_first, s.size(), "s")];
}

cplx symmetric_c(const Torus &t, const SymmetricParams &p, long n, CSign sign)
{
    const cplx sn = p.s_at(n);
    const cplx prod = F_at(t, p.gamma_at(n + 1), p.gamma_at(n), "gamma_{n+1}, gamma_n")
                      * F_at(t, p.gamma_at(n - 1), p.gamma_at(n), "gamma_{n-1}, gamma_n");
    const cplx factor = (sign == CSign::Derived) ? (1.0 - sn * sn) : (sn * sn - 1.0);
    return factor * prod / 4.0;
}

cplx symmetric_v(const Torus &t, const SymmetricParams &p, long n)
{
    const cplx g0 = p.gamma_at(n);
    const cplx g1 = p.gamma_at(n + 1);
    return 0.5 * (p.s_at(n) * F_at(t, g1, g0, "gamma_{n+1}, gamma_n") - p.s_at(n + 1) * F_at(t, g0, g1, "gamma_n, gamma_{n+1}"));
}

TyurinState symmetric_initial_state(const Torus &t, const SymmetricParams &p, long n)
{
    const cplx diff = F_at(t, p.gamma_at(n - 1), p.gamma_at(n), "gamma_{n-1}, gamma_n");
    const cplx sum = -p.s_at(n) * diff;
    return {p.gamma_at(n), 0.5 * (sum + diff), 0.5 * (sum - diff), 0.0};
}

BandedOperator symmetric_L2(const Torus &t, const SymmetricParams &p, long n_min, long n_max, CSign sign)
{
    std::vector<cplx> v, c;
    for (long n = n_min; n <= n_max; ++n) {
        v.push_back(symmetric_v(t, p, n - 1));
        c.push_back(symmetric_c(t, p, n - 1, sign));
    }
    return build_L2(n_min, v, c);
}

BandedOperator symmetric_L4(const Torus &t, const SymmetricParams &p, long n_min, long n_max, CSign sign)
{
    return assemble_symmetric_L4(t, p, symmetric_L2(t, p, n_min - 1, n_max + 1, sign), n_min, n_max);
}

BandedOperator assemble_symmetric_L4(const Torus &t, const SymmetricParams &p, const BandedOperator &L2,
                                     long n_min, long n_max)
{
    BandedOperator L4 = compose(L2, L2).restricted(n_min, n_max);
    for (long n = n_min; n <= n_max; ++n) {
        const cplx shift = wp_at(t, p.gamma_at(n), "gamma_n") + wp_at(t, p.gamma_at(n - 1), "gamma_{n-1}");
        L4.set(n, 0, L4.coeff(n, 0) - shift);
    }
    return L4;
}

SymmetricParams random_symmetric_params(const Torus &t, long n_first, long n_last, std::uint64_t seed,
                                        double margin, double s_half)
{
    if (n_last < n_first) {
        throw std::invalid_argument("random_symmetric_params: empty range");
    }
    std::mt19937_64 rng(seed);
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const double guard = margin * std::abs(t.omega());

    SymmetricParams p;
    p.n_first = n_first;
    for (long n = n_first; n <= n_last; ++n) {
        cplx g;
        for (int tries = 0;; ++tries) {
            if (tries > 100000) {
                throw std::runtime_error("random_symmetric_params: margin leaves no admissible gamma");
            }
            g = 2.0 * (unit() * t.omega() + unit() * t.omega_prime());
            bool ok = t.lattice_distance(g) > guard && t.lattice_distance(2.0 * g) > guard;
            if (ok && !p.gamma.empty()) {
                const cplx prev = p.gamma.back();
                ok = t.lattice_distance(g - prev) > guard && t.lattice_distance(g + prev) > guard;
            }
            if (ok) {
                break;
            }
        }
        p.gamma.push_back(g);
        p.s.push_back(s_half * cplx(2.0 * unit() - 1.0, 2.0 * unit() - 1.0));
    }
    return p;
}

GeneralRun symmetric_as_general(const Torus &t, const SymmetricParams &p)
{
    const long n0 = p.n_first + 1;
    const TyurinState s0 = symmetric_initial_state(t, p, n0);
    std::vector<cplx> gamma, v;
    for (long n = n0; n <= p.n_last(); ++n) {
        gamma.push_back(p.gamma_at(n));
        if (n > n0) {
            v.push_back(symmetric_v(t, p, n - 1));
        }
    }
    return run_general(t, n0, gamma, v, 0.0, s0.a1, s0.a2);
}

} // namespace ellcomm
