#pragma once

#include "ellcomm/elliptic.hpp"
#include "ellcomm/operators.hpp"

#include <cstdint>
#include <vector>

namespace ellcomm {

/// Tyurin parameters of the rank-2 transfer matrix at one lattice site:
/// poles γ¹ = gamma + c, γ² = -gamma + c with residue directions (a1, 1)
/// and (a2, 1).
struct TyurinState
{
    cplx gamma;
    cplx a1, a2;
    cplx c_const = 0.0;

    cplx pole1() const { return gamma + c_const; }
    cplx pole2() const { return -gamma + c_const; }
};

/// a1 a2 / (a1 - a2); throws DegenerateState when a1 ≈ a2.
cplx residue_weight(const TyurinState &s);

/// c_{n+1} from the condition that χ¹_n vanishes at the next poles.
cplx next_c(const Torus &t, const TyurinState &s, cplx gamma_next);

struct ChiValues
{
    cplx chi1, chi2;
};

/// Entries of the bottom row of the transfer matrix,
///   χ¹ = -c_{n+1} + K (ζ(z-γ¹) - ζ(z-γ²) + ζ(γ¹) - ζ(γ²)),
///   χ² = ζ(z) - v_{n+1} + A (ζ(z-γ¹) + ζ(γ¹)) + B (ζ(z-γ²) + ζ(γ²)),
/// K = a1 a2/(a1-a2), A = a2/(a1-a2), B = a1/(a2-a1).
ChiValues chi_functions(const Torus &t, const TyurinState &s, cplx c_next, cplx v_next, cplx z);

/// χ¹ written through γ_{n+1} instead of c_{n+1}:
///   K [ζ(z-γ-c) - ζ(z+γ-c) - ζ(γ_{n+1}-γ) + ζ(γ_{n+1}+γ)].
cplx chi1_via_next_gamma(const Torus &t, const TyurinState &s, cplx gamma_next, cplx z);

struct StepResult
{
    cplx c_next;
    TyurinState next;
    double chi1_zero_residual = 0; // max_s |χ¹(γ^s_{n+1})| / scale
    double a_two_route_residual = 0; // max_s |a^s_{n+1} + χ²(γ^s_{n+1})| / scale
};

/// One step of the pole dynamics: c_{n+1} and a^{1,2}_{n+1} from the
/// closed-form recurrences, plus both consistency residuals. Throws
/// DegenerateState on a1 ≈ a2 or when a ζ argument hits the lattice.
StepResult step_general(const Torus &t, const TyurinState &s, cplx gamma_next, cplx v_next);

/// Taylor data χ¹ = -c_{n+1}(1 + ξ11 z + ξ12 z² + ...),
/// χ² = 1/z - v_{n+1} + ξ21 z + ...
struct Xi
{
    cplx xi11, xi12, xi21;
};

/// Closed form through ℘ and ℘' at the poles. Throws DegenerateState if
/// c_next ≈ 0.
Xi xi_coefficients(const Torus &t, const TyurinState &s, cplx c_next);

/// Coefficients of T + v_n + c_n T^{-1} on [n_min, n_max]; `v` and `c`
/// start at n_min.
BandedOperator build_L2(long n_min, const std::vector<cplx> &v, const std::vector<cplx> &c);

/// Output of the general-mode dynamics started at site n0.
struct GeneralRun
{
    long n0 = 0;
    std::vector<TyurinState> states; // n0 .. n0 + steps
    std::vector<cplx> c;             // c_n, n = n0+1 .. n0 + steps
    std::vector<cplx> v;             // v_n, n = n0+1 .. n0 + steps
    std::vector<Xi> xi;              // ξ_n, n = n0 .. n0 + steps - 1
    double max_chi1_zero_residual = 0;
    double max_a_two_route_residual = 0;

    long last() const { return n0 + static_cast<long>(c.size()); }
};

/// Runs the recurrence with free data γ_n (n = n0 .. n0+steps), v_n
/// (n = n0+1 .. n0+steps), a constant c and initial a^{1,2}_{n0}.
GeneralRun run_general(const Torus &t, long n0, const std::vector<cplx> &gamma, const std::vector<cplx> &v,
                       cplx c_const, cplx a1_0, cplx a2_0);

/// L₂ = T + v_n + c_n T^{-1} on the sites where the run defines v, c.
BandedOperator general_L2(const GeneralRun &run);

/// L₄ = L₂² - (ξ11_{n-1}+ξ11_{n-2}) T + c_n (ξ11_{n-1}+ξ11_{n-2}) T^{-1} + u_n,
/// u_n = v_n(ξ11_{n-1}-ξ11_{n-2}) + ξ12_{n-1} + ξ12_{n-2} - (ξ11_{n-2})² - (ξ21_{n-1}+ξ21_{n-2}),
/// on [n0+2, last-1].
BandedOperator general_L4(const GeneralRun &run);

/// Free data of the c = 0 family: γ_n and s_n for n = n_first .. n_first+size-1.
struct SymmetricParams
{
    long n_first = 0;
    std::vector<cplx> gamma;
    std::vector<cplx> s;

    long n_last() const { return n_first + static_cast<long>(gamma.size()) - 1; }
    cplx gamma_at(long n) const;
    cplx s_at(long n) const;
};

/// Sign convention for c_{n+1} in terms of s_n. `Derived` is the one implied
/// by a¹-a² = F(γ_{n-1},γ_n), s = -(a¹+a²)/(a¹-a²):
///   4c_{n+1} = (1 - s_n²) F(γ_{n+1},γ_n) F(γ_{n-1},γ_n).
/// `Flipped` uses the opposite overall sign, (s_n² - 1).
enum class CSign
{
    Derived,
    Flipped
};

/// c_{n+1} for the symmetric family.
cplx symmetric_c(const Torus &t, const SymmetricParams &p, long n, CSign sign = CSign::Derived);
/// v_{n+1} = (s_n F(γ_{n+1},γ_n) - s_{n+1} F(γ_n,γ_{n+1})) / 2.
cplx symmetric_v(const Torus &t, const SymmetricParams &p, long n);

/// Initial residue directions at n from s_n: a¹-a² = F(γ_{n-1},γ_n),
/// a¹+a² = -s_n F(γ_{n-1},γ_n).
TyurinState symmetric_initial_state(const Torus &t, const SymmetricParams &p, long n);

/// Symmetric-mode L₂ on [n_min, n_max]: c_n, v_n from (γ, s). Needs γ on
/// [n_min-2, n_max] and s on [n_min-1, n_max].
BandedOperator symmetric_L2(const Torus &t, const SymmetricParams &p, long n_min, long n_max,
                            CSign sign = CSign::Derived);

/// Symmetric-mode L₄ = L₂² - ℘(γ_n) - ℘(γ_{n-1}) on [n_min, n_max].
BandedOperator symmetric_L4(const Torus &t, const SymmetricParams &p, long n_min, long n_max,
                            CSign sign = CSign::Derived);

/// The same assembly from a caller-supplied L₂ covering [n_min-1, n_max+1].
BandedOperator assemble_symmetric_L4(const Torus &t, const SymmetricParams &p, const BandedOperator &L2,
                                     long n_min, long n_max);

/// Seeded symmetric data on [n_first, n_last]: γ_n uniform in the period
/// cell, rejected unless γ_n, 2γ_n and γ_n ± γ_{n-1} keep lattice distance
/// above margin·|ω|; s_n uniform in the square [-s_half, s_half]².
SymmetricParams random_symmetric_params(const Torus &t, long n_first, long n_last, std::uint64_t seed,
                                        double margin = 0.5, double s_half = 0.5);

/// Runs the general recurrence with c = 0, v_n from the symmetric formula
/// and a^{1,2} seeded at p.n_first+1 from s; the first usable site is
/// p.n_first+1 and the last p.n_last()-1.
GeneralRun symmetric_as_general(const Torus &t, const SymmetricParams &p);

} // namespace ellcomm
