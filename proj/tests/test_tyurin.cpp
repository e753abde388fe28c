#include "ellcomm/errors.hpp"
#include "ellcomm/tyurin.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ellcomm;

namespace {

const cplx I(0.0, 1.0);

Torus torus()
{
    return Torus(1.0, 1.3 * I);
}

// 40-step general-mode run with c != 0 and free γ_n, v_n.
GeneralRun general_run(const Torus &t, std::uint64_t seed, cplx c)
{
    const SymmetricParams p = random_symmetric_params(t, 0, 40, seed);
    std::mt19937_64 rng(seed + 100);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<cplx> v;
    for (int k = 0; k < 40; ++k) {
        v.push_back(cplx(u(rng), u(rng)));
    }
    return run_general(t, 0, p.gamma, v, c, cplx(0.8, 0.3), cplx(-0.4, 0.6));
}

// (1/2πi)∮ f around `center`, trapezoid rule on a circle.
cplx residue(const std::function<cplx(cplx)> &f, cplx center, double radius = 0.05, int points = 128)
{
    cplx sum = 0.0;
    for (int k = 0; k < points; ++k) {
        const cplx e = std::polar(radius, 2.0 * std::numbers::pi * k / points);
        sum += f(center + e) * e;
    }
    return sum / static_cast<double>(points);
}

double coefficient_gap(const BandedOperator &a, const BandedOperator &b)
{
    double worst = 0;
    for (long n = a.n_min(); n <= a.n_max(); ++n) {
        for (int i = -2; i <= 2; ++i) {
            const cplx x = a.coeff(n, i);
            worst = std::max(worst, std::abs(x - b.coeff(n, i)) / std::max(1.0, std::abs(x)));
        }
    }
    return worst;
}

} // namespace

TEST(Tyurin, GeneralRunZeroAndTwoRouteResiduals)
{
    const Torus t = torus();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const GeneralRun run = general_run(t, seed, cplx(0.13, 0.07));
        ASSERT_EQ(run.c.size(), 40u);
        EXPECT_LT(run.max_chi1_zero_residual, 1e-9) << seed;
        EXPECT_LT(run.max_a_two_route_residual, 1e-9) << seed;
    }
}

TEST(Tyurin, Chi1ThroughNextGammaMatchesCForm)
{
    const Torus t = torus();
    const GeneralRun run = general_run(t, 4, cplx(0.13, 0.07));
    for (std::size_t k = 0; k < 10; ++k) {
        const TyurinState &s = run.states[k];
        for (cplx z : {cplx(0.37, 0.21), cplx(-0.52, 0.9)}) {
            const cplx a = chi_functions(t, s, run.c[k], run.v[k], z).chi1;
            const cplx b = chi1_via_next_gamma(t, s, run.states[k + 1].gamma, z);
            EXPECT_LT(std::abs(a - b), 1e-10 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST(Tyurin, Chi1ResiduesCancel)
{
    const Torus t = torus();
    const GeneralRun run = general_run(t, 5, cplx(0.13, 0.07));
    for (std::size_t k = 0; k < 5; ++k) {
        const TyurinState &s = run.states[k];
        auto chi1 = [&](cplx z) { return chi_functions(t, s, run.c[k], run.v[k], z).chi1; };
        const cplx r1 = residue(chi1, s.pole1());
        const cplx r2 = residue(chi1, s.pole2());
        EXPECT_GT(std::abs(r1), 1e-3);
        EXPECT_LT(std::abs(r1 + r2), 1e-9 * std::abs(r1));
        EXPECT_LT(std::abs(r1 - residue_weight(s)), 1e-9 * std::abs(r1));
    }
}

TEST(Tyurin, Chi2HasSimplePoleAtOrigin)
{
    const Torus t = torus();
    const GeneralRun run = general_run(t, 6, cplx(0.13, 0.07));
    const TyurinState &s = run.states[3];
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const cplx z = eps * cplx(0.6, 0.8);
        const cplx regular = chi_functions(t, s, run.c[3], run.v[3], z).chi2 - 1.0 / z;
        EXPECT_LT(std::abs(regular + run.v[3]), 50.0 * eps);
    }
}

TEST(Tyurin, ChiDoublyPeriodic)
{
    const Torus t = torus();
    const GeneralRun run = general_run(t, 7, cplx(0.13, 0.07));
    const TyurinState &s = run.states[8];
    const cplx z(0.41, 0.33);
    const auto base = chi_functions(t, s, run.c[8], run.v[8], z);
    for (cplx period : {2.0 * t.omega(), 2.0 * t.omega_prime(), 2.0 * (t.omega() - t.omega_prime())}) {
        const auto moved = chi_functions(t, s, run.c[8], run.v[8], z + period);
        EXPECT_LT(std::abs(moved.chi1 - base.chi1), 1e-9 * std::max(1.0, std::abs(base.chi1)));
        EXPECT_LT(std::abs(moved.chi2 - base.chi2), 1e-9 * std::max(1.0, std::abs(base.chi2)));
    }
}

TEST(Tyurin, XiMatchesTaylorExpansion)
{
    const Torus t = torus();
    const GeneralRun run = general_run(t, 8, cplx(0.13, 0.07));
    const std::size_t k = 6;
    const TyurinState &s = run.states[k];
    const Xi xi = run.xi[k];
    // Fit χ¹ on a small circle: the Fourier coefficients are Taylor coefficients.
    auto chi1 = [&](cplx z) { return chi_functions(t, s, run.c[k], run.v[k], z).chi1; };
    const double r = 0.05;
    const int m = 64;
    cplx a1 = 0.0, a2 = 0.0;
    for (int j = 0; j < m; ++j) {
        const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * j / m);
        const cplx f = chi1(r * e);
        a1 += f / e;
        a2 += f / (e * e);
    }
    a1 /= m * r;
    a2 /= m * r * r;
    const cplx c = run.c[k];
    EXPECT_LT(std::abs(-c * xi.xi11 - a1), 1e-9 * std::max(1.0, std::abs(a1)));
    EXPECT_LT(std::abs(-c * xi.xi12 - a2), 1e-8 * std::max(1.0, std::abs(a2)));
}

TEST(Tyurin, SymmetricXiIdentities)
{
    const Torus t = torus();
    const SymmetricParams p = random_symmetric_params(t, -3, 41, 11);
    const GeneralRun run = symmetric_as_general(t, p);
    for (std::size_t k = 0; k < run.xi.size(); ++k) {
        const long n = run.n0 + static_cast<long>(k);
        const Xi &xi = run.xi[k];
        EXPECT_LT(std::abs(xi.xi11), 1e-12);
        const cplx two_route = wp(t, p.gamma_at(n)) - wp(t, p.gamma_at(n + 1));
        EXPECT_LT(std::abs(xi.xi12 - two_route), 1e-9 * std::max(1.0, std::abs(two_route))) << n;
        EXPECT_LT(std::abs(xi.xi21 - wp(t, p.gamma_at(n))), 1e-9 * std::max(1.0, std::abs(xi.xi21))) << n;
    }
}

TEST(Tyurin, SymmetricResidueDirectionsReproduceV)
{
    // Feeding v from the symmetric formula into the general recurrence keeps
    // a¹ - a² = F(γ_{n-1}, γ_n) and -(a¹ + a²)/(a¹ - a²) = s_n at every site.
    const Torus t = torus();
    const SymmetricParams p = random_symmetric_params(t, -3, 41, 12);
    const GeneralRun run = symmetric_as_general(t, p);
    for (std::size_t k = 0; k < run.states.size(); ++k) {
        const long n = run.n0 + static_cast<long>(k);
        const TyurinState &s = run.states[k];
        const cplx diff = F(t, p.gamma_at(n - 1), p.gamma_at(n));
        EXPECT_LT(std::abs((s.a1 - s.a2) - diff), 1e-9 * std::max(1.0, std::abs(diff))) << n;
        const cplx s_rec = -(s.a1 + s.a2) / (s.a1 - s.a2);
        EXPECT_LT(std::abs(s_rec - p.s_at(n)), 1e-9) << n;
    }
}

TEST(Tyurin, SymmetricCSign)
{
    const Torus t = torus();
    const SymmetricParams p = random_symmetric_params(t, -3, 41, 13);
    const GeneralRun run = symmetric_as_general(t, p);
    for (std::size_t k = 0; k < run.c.size(); ++k) {
        const long n = run.n0 + static_cast<long>(k);
        const cplx derived = symmetric_c(t, p, n, CSign::Derived);
        EXPECT_LT(std::abs(run.c[k] - derived), 1e-9 * std::max(1.0, std::abs(derived))) << n;
        // The opposite overall sign disagrees with the recurrence by 2|c|.
        const cplx flipped = symmetric_c(t, p, n, CSign::Flipped);
        EXPECT_NEAR(std::abs(run.c[k] - flipped), 2.0 * std::abs(derived), 1e-9 * std::max(1.0, std::abs(derived)));
    }
}

TEST(Tyurin, GeneralL4AtZeroCMatchesSymmetricAssembly)
{
    const Torus t = torus();
    for (std::uint64_t seed : {21u, 22u}) {
        const SymmetricParams p = random_symmetric_params(t, -3, 41, seed);
        const BandedOperator general = general_L4(symmetric_as_general(t, p));
        const BandedOperator symmetric = symmetric_L4(t, p, general.n_min(), general.n_max());
        EXPECT_LT(coefficient_gap(general, symmetric), 1e-9) << seed;
    }
}

TEST(Tyurin, SymmetricL4HasOrderSixPartner)
{
    const Torus t = torus();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const SymmetricParams p = random_symmetric_params(t, -3, 41, seed);
        const BandedOperator L4 = symmetric_L4(t, p, 0, 40);
        const PartnerResult r = find_commuting_partner(L4, 3, 3, 0, 40);
        EXPECT_TRUE(r.has_partner);
        EXPECT_LT(r.residual, 1e-8) << seed;

        // Shifting the c_n sequence of L₂ by 1e-3 destroys the partner.
        BandedOperator L2 = symmetric_L2(t, p, -1, 41);
        for (long n = L2.n_min(); n <= L2.n_max(); ++n) {
            L2.set(n, -1, L2.coeff(n, -1) + 1e-3);
        }
        const PartnerResult bad = find_commuting_partner(assemble_symmetric_L4(t, p, L2, 0, 40), 3, 3, 0, 40);
        EXPECT_GT(bad.residual, 1e-4) << seed;
        EXPECT_GT(bad.residual, 1e4 * r.residual) << seed;
    }
}

TEST(Tyurin, FlippedSignHasNoPartner)
{
    const Torus t = torus();
    const SymmetricParams p = random_symmetric_params(t, -3, 41, 31);
    const PartnerResult r = find_commuting_partner(symmetric_L4(t, p, 0, 40, CSign::Flipped), 3, 3, 0, 40);
    EXPECT_FALSE(r.has_partner);
}

TEST(Tyurin, PerturbedGammaStaysInFamily)
{
    const Torus t = torus();
    SymmetricParams p = random_symmetric_params(t, -3, 41, 32);
    p.gamma[static_cast<std::size_t>(5 - p.n_first)] += 1e-3;
    const PartnerResult r = find_commuting_partner(symmetric_L4(t, p, 0, 40), 3, 3, 0, 40);
    EXPECT_LT(r.residual, 1e-8);
}

TEST(Tyurin, LatticeShiftOfGammaLeavesOperatorUnchanged)
{
    const Torus t = torus();
    const SymmetricParams p = random_symmetric_params(t, -3, 41, 33);
    SymmetricParams q = p;
    for (std::size_t k = 0; k < q.gamma.size(); ++k) {
        q.gamma[k] += (k % 2 == 0) ? 2.0 * t.omega() : -2.0 * t.omega_prime();
    }
    EXPECT_LT(coefficient_gap(symmetric_L4(t, p, 0, 40), symmetric_L4(t, q, 0, 40)), 1e-9);
    const GeneralRun a = symmetric_as_general(t, p);
    const GeneralRun b = symmetric_as_general(t, q);
    EXPECT_LT(b.max_chi1_zero_residual, 1e-9);
    EXPECT_LT(std::abs(a.c[7] - b.c[7]), 1e-9 * std::abs(a.c[7]));
}

TEST(Tyurin, BuildL2)
{
    const BandedOperator L = build_L2(-2, std::vector<cplx>(6, cplx(0.5, 0.1)), std::vector<cplx>(6, cplx(-0.3, 0.2)));
    for (long n = -2; n <= 3; ++n) {
        EXPECT_EQ(L.coeff(n, 1), cplx(1.0));
        EXPECT_EQ(L.coeff(n, 0), cplx(0.5, 0.1));
        EXPECT_EQ(L.coeff(n, -1), cplx(-0.3, 0.2));
    }
    const GridFunction ones = GridFunction::generate(-3, 4, [](long) { return cplx(1.0); });
    const GridFunction out = apply(L, ones);
    for (long n = out.n_min(); n <= out.n_max(); ++n) {
        EXPECT_EQ(out(n), cplx(1.0) + cplx(0.5, 0.1) + cplx(-0.3, 0.2));
    }
}

TEST(Tyurin, DegenerateStates)
{
    const Torus t = torus();
    const TyurinState equal{cplx(0.3, 0.2), 0.7, 0.7, 0.0};
    EXPECT_THROW(residue_weight(equal), DegenerateState);
    EXPECT_THROW(step_general(t, equal, cplx(0.5, 0.4), 0.1), DegenerateState);

    const TyurinState s{cplx(0.3, 0.2), 0.7, -0.2, 0.0};
    EXPECT_THROW(xi_coefficients(t, s, 0.0), DegenerateState);
    // γ_{n+1} = γ_n puts ζ(γ_{n+1} - γ_n) on its pole.
    EXPECT_THROW(next_c(t, s, s.gamma), DegenerateState);
}
