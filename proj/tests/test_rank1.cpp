#include "ellcomm/errors.hpp"
#include "ellcomm/rank1.hpp"
#include "ellcomm/sampling.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ellcomm;

namespace {

const cplx I(0.0, 1.0);

Rank1Function demo(cplx omega_prime = I)
{
    return Rank1Function(Torus(1.0, omega_prime), cplx(0.31, 0.17), cplx(-0.42, 0.23), cplx(0.93, 0.61));
}

double log_slope(const std::function<cplx(double)> &probe)
{
    return std::log(std::abs(probe(1e-2)) / std::abs(probe(1e-3))) / std::log(10.0);
}

} // namespace

TEST(Rank1, ZeroIndexIsOne)
{
    const auto psi = demo();
    for (cplx z : {cplx(0.1, 0.9), cplx(1.7, 0.3), cplx(-0.6, -0.4)}) {
        EXPECT_LT(std::abs(psi(0, z) - 1.0), 1e-12);
    }
}

TEST(Rank1, DoublePeriodicity)
{
    for (cplx op : {I, cplx(0.3, 1.1)}) {
        const auto psi = demo(op);
        const Torus &t = psi.torus();
        const auto pts = sample_points(t, 10, 4, [&](cplx z) {
            return clear_of(t, z, {psi.p_plus(), psi.p_minus(), psi.gamma()}, 0.1);
        });
        for (long n = -3; n <= 3; ++n) {
            for (cplx z : pts) {
                const cplx v = psi(n, z);
                EXPECT_LT(std::abs(psi(n, z + 2.0 * t.omega()) - v), 1e-9 * std::max(1.0, std::abs(v)));
                EXPECT_LT(std::abs(psi(n, z + 2.0 * t.omega_prime()) - v), 1e-9 * std::max(1.0, std::abs(v)));
            }
        }
    }
}

TEST(Rank1, ZeroAndPoleOrders)
{
    const auto psi = demo();
    const cplx dir = std::polar(1.0, 0.7);
    for (long n = 1; n <= 3; ++n) {
        const double zero = log_slope([&](double e) { return psi(n, psi.p_minus() + e * dir); });
        EXPECT_NEAR(zero, double(n), 0.1) << n;
        const double pole = log_slope([&](double e) { return psi(n, psi.p_plus() + e * dir); });
        EXPECT_NEAR(pole, -double(n), 0.1) << n;
    }
    const double simple = log_slope([&](double e) { return psi(2, psi.gamma() + e * dir); });
    EXPECT_NEAR(simple, -1.0, 0.1);
}

TEST(Rank1, LeadingCoefficientAtPPlusIsOne)
{
    const auto psi = demo();
    for (long n = 1; n <= 4; ++n) {
        const double e = 1e-6;
        const cplx w = e * std::polar(1.0, 0.3);
        EXPECT_LT(std::abs(psi(n, psi.p_plus() + w) * std::pow(w, double(n)) - 1.0), 1e-4);
    }
}

TEST(Rank1, DegenerateDivisor)
{
    const Torus t(1.0, I);
    EXPECT_THROW(Rank1Function(t, 0.3, 0.3 + 2.0, 0.5), DegenerateDivisor);
    EXPECT_THROW(Rank1Function(t, 0.3, -0.3, 0.3), DegenerateDivisor);
    // p+ - γ - nU is a lattice point at n = 2.
    const cplx pp(0.3, 0.1), pm(0.1, 0.05);
    const cplx U = pp - pm;
    const Rank1Function psi(t, pp, pm, pp - 2.0 * U);
    EXPECT_THROW(psi.normalization(2), DegenerateDivisor);
    EXPECT_NO_THROW(psi.normalization(1));
}

TEST(Rank1, PairCheck)
{
    const auto psi = demo();
    const auto rep = rank1_pair_check(psi);
    EXPECT_LT(rep.eigen_residual_f, 1e-8);
    EXPECT_LT(rep.eigen_residual_g, 1e-8);
    EXPECT_LT(rep.commutator_norm, 1e-8);
    EXPECT_LT(rep.monic_defect_f, 1e-8);
    EXPECT_EQ(rep.L_f.upper_span(), 1);
    EXPECT_EQ(rep.L_f.lower_span(), 1);
    EXPECT_GE(rep.sample_count, 12u);
    const auto j = rep.to_json();
    EXPECT_TRUE(j.contains("commutator_norm"));
}

TEST(Rank1, GaugeCovariance)
{
    const auto psi = demo();
    const auto rep = rank1_pair_check(psi);
    const auto g = GridFunction::generate(-12, 12, [](long n) { return std::polar(1.0 + 0.1 * (n % 3), 0.2 * n); });
    // ψ -> gψ carries L -> g L g^{-1}.
    const auto Lg = conjugate(rep.L_f, g);
    const Torus &t = psi.torus();
    const cplx z(1.3, 0.77);
    const auto seq = psi.sequence(z, -9, 9);
    const auto gseq = GridFunction::generate(-9, 9, [&](long n) { return g(n) * seq(n); });
    const cplx fz = zeta_w(t, z - psi.p_plus()) - zeta_w(t, z - psi.p_minus());
    const double r0 = eigen_residual(rep.L_f, seq, fz);
    const double r1 = eigen_residual(Lg, gseq, fz);
    EXPECT_LT(r0, 1e-8);
    EXPECT_LT(r1, 1e-8);
}
