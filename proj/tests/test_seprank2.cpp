#include "ellcomm/errors.hpp"
#include "ellcomm/sampling.hpp"
#include "ellcomm/seprank2.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ellcomm;

namespace {

const cplx I(0.0, 1.0);

SepRank2Function demo()
{
    return SepRank2Function(Torus(1.0, I), {cplx(0.23, 0.11), cplx(0.61, 0.0), cplx(1.17, 0.4), 1.3, -0.7});
}

std::vector<cplx> points(const SepRank2Function &psi, std::size_t count)
{
    const auto &d = psi.data();
    return sample_points(psi.torus(), count, 21, [&](cplx z) {
        return clear_of(psi.torus(), z, {d.z0, -d.z0, d.gamma1, d.gamma2}, 0.1);
    });
}

} // namespace

TEST(SepRank2, Normalization)
{
    const auto psi = demo();
    for (cplx z : points(psi, 10)) {
        EXPECT_LT(std::abs(psi(0, 0, z) - 1.0), 1e-10);
        EXPECT_LT(std::abs(psi(0, 1, z)), 1e-10);
        EXPECT_LT(std::abs(psi(1, 0, z)), 1e-9);
        EXPECT_LT(std::abs(psi(1, 1, z) - 1.0), 1e-9);
    }
}

TEST(SepRank2, DoublePeriodicity)
{
    const auto psi = demo();
    const Torus &t = psi.torus();
    for (cplx z : points(psi, 6)) {
        for (long n = -2; n <= 4; ++n) {
            for (int i = 0; i < 2; ++i) {
                const cplx v = psi(n, i, z);
                const double s = std::max(1.0, std::abs(v));
                EXPECT_LT(std::abs(psi(n, i, z + 2.0 * t.omega()) - v), 1e-9 * s) << n << " " << i;
                EXPECT_LT(std::abs(psi(n, i, z + 2.0 * t.omega_prime()) - v), 1e-9 * s) << n << " " << i;
            }
        }
    }
}

TEST(SepRank2, ResidueRelations)
{
    const auto psi = demo();
    const auto r0 = residue_relation_check(psi, 0);
    EXPECT_LT(r0.r1, 1e-6);
    EXPECT_LT(r0.r2, 1e-6);
    for (long n = 1; n <= 4; ++n) {
        const auto r = residue_relation_check(psi, n);
        EXPECT_LT(r.r1, 1e-6) << n;
        EXPECT_LT(r.r2, 1e-6) << n;
    }
    const cplx perturbed[2] = {1.3 + 1e-2, -0.7};
    const auto rp = residue_relation_check(psi, 3, perturbed);
    EXPECT_GT(rp.r1, 1e-3);
    EXPECT_LT(rp.r2, 1e-6);
}

TEST(SepRank2, AsymptoticOrders)
{
    // ψ^i_{2k+j}: near z0 order -k on the diagonal, near -z0 order k (or k+1 when i < j).
    const auto psi = demo();
    const cplx z0 = psi.data().z0;
    const cplx dir = std::polar(1.0, 0.4);
    auto slope = [&](long n, int i, cplx at) {
        return std::log(std::abs(psi(n, i, at + 1e-2 * dir)) / std::abs(psi(n, i, at + 1e-3 * dir)))
               / std::log(10.0);
    };
    EXPECT_NEAR(slope(4, 0, z0), -2.0, 0.1);
    EXPECT_NEAR(slope(5, 1, z0), -2.0, 0.1);
    EXPECT_NEAR(slope(4, 0, -z0), 2.0, 0.1);
    EXPECT_NEAR(slope(5, 0, -z0), 3.0, 0.1);
    EXPECT_NEAR(slope(3, 0, -z0), 2.0, 0.1);
    EXPECT_NEAR(slope(2, 1, z0), 0.0, 0.1);
}

TEST(SepRank2, OperatorCheck)
{
    const auto psi = demo();
    const auto rep = seprank2_operator_check(psi);
    EXPECT_LT(rep.normalization_residual, 1e-9);
    EXPECT_LT(rep.periodicity_residual, 1e-9);
    EXPECT_LT(rep.tu_residual, 1e-6);
    EXPECT_LT(rep.eigen_residual_f, 1e-8);
    EXPECT_LT(rep.eigen_residual_g, 1e-8);
    EXPECT_LT(rep.commutator_norm, 1e-8);
    // One scalar component cannot pin down a spans-(2,2) operator.
    EXPECT_GT(rep.single_component_condition, 1e12);
    EXPECT_NE(rep.single_component_error.find("RankDeficient"), std::string::npos);
    EXPECT_LT(rep.L_f.monic_defect(), 1e-7);
}

TEST(SepRank2, Degenerate)
{
    const Torus t(1.0, I);
    EXPECT_THROW(SepRank2Function(t, {0.23, 0.6, 0.6 + 2.0 * I, 1.3, -0.7}), DegenerateDivisor);
    EXPECT_THROW(SepRank2Function(t, {0.23, 0.6, 1.1, 1.3, 1.3}), DegenerateDivisor);
    EXPECT_THROW(SepRank2Function(t, {1.0, 0.6, 1.1, 1.3, -0.7}), DegenerateDivisor);
}
