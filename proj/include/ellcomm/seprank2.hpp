#pragma once

#include "ellcomm/elliptic.hpp"
#include "ellcomm/operators.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace ellcomm {

/// Punctures at ±z0, poles γ1, γ2 with residue directions (a_s, 1).
struct SepRank2Data
{
    cplx z0;
    cplx gamma1, gamma2;
    cplx a1, a2;
};

/// Vector eigenfunction (ψ^0_n, ψ^1_n) of a rank-2 commuting pair with
/// separated punctures on an elliptic curve, normalized by ψ^i_n = δ_in for
/// i, n in {0, 1}.
class SepRank2Function
{
public:
    /// Throws DegenerateDivisor when γ1 ≡ γ2, a1 = a2, a_s = 0 or z0 is a
    /// 2-torsion or lattice point.
    SepRank2Function(Torus torus, SepRank2Data data);

    const Torus &torus() const { return torus_; }
    const SepRank2Data &data() const { return d_; }

    /// ψ^i_n(z) for i in {0, 1}; throws DegenerateDivisor when a
    /// normalization denominator vanishes at this n.
    cplx operator()(long n, int i, cplx z) const;

    GridFunction sequence(int i, cplx z, long n_min, long n_max) const;

private:
    struct Coefficients
    {
        cplx lead;      // A_m or A'_m
        cplx b, c;      // B_m, C_m or B'_m, C'_m
    };
    Coefficients even_coefficients(long m) const;
    Coefficients odd_coefficients(long m) const;
    cplx sig(cplx z) const { return sigma_w(torus_, z); }
    void require_nonzero_sigma(cplx arg, const char *what, long m) const;

    Torus torus_;
    SepRank2Data d_;
};

struct ResidueCheck
{
    double r1 = 0, r2 = 0;
    cplx res0_1, res1_1, res0_2, res1_2; // res^i_s
};

/// Residues of ψ^0_n, ψ^1_n at γ1, γ2 by symmetric differences and one
/// Richardson step over ε = 1e-3, 5e-4, then
/// r_s = |a_s res^1_s - res^0_s| / (|res^0_s| + |res^1_s|) (0 when both vanish).
/// `a_override` replaces (a1, a2) in the relation only.
ResidueCheck residue_relation_check(const SepRank2Function &psi, long n, const cplx *a_override = nullptr);

struct SepRank2Report
{
    long n_min = 0, n_max = 0;
    std::size_t sample_count = 0;
    double normalization_residual = 0; // max |ψ^i_n - δ_in|, i, n in {0, 1}
    double periodicity_residual = 0;
    double tu_residual = 0;            // max r_s over n in [0, 4]
    double fit_residual_f = 0, fit_residual_g = 0;
    double eigen_residual_f = 0, eigen_residual_g = 0;
    double commutator_norm = 0;
    double single_component_agreement = 0; // max relative coefficient gap, component 0 vs joint
    double single_component_condition = 0; // worst condition number of the component-0 fit
    std::string single_component_error;    // RankDeficient message from the literal fit, if any
    BandedOperator L_f, L_g;

    nlohmann::json to_json() const;
};

/// Joint reconstruction of L_f (f = ζ(z-z0) - ζ(z+z0), spans (2,2)) and
/// L_g (g = ℘(z-z0) + ℘(z+z0), spans (4,4)) from both components, with
/// held-out validation, the commutator, and a component-0-only fit of L_f
/// compared with the joint one away from the rows touching ψ^0_1 ≡ 0.
SepRank2Report seprank2_operator_check(const SepRank2Function &psi, long n_min = -8, long n_max = 8,
                                       std::size_t samples = 16, std::size_t held_out = 5, std::uint64_t seed = 0);

} // namespace ellcomm
