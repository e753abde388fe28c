#pragma once

#include "ellcomm/elliptic.hpp"
#include "ellcomm/operators.hpp"

#include <json.hpp>

#include <cstdint>

namespace ellcomm {

/// Rank-one eigenfunction on a torus with punctures p_plus, p_minus and a
/// single pole gamma:
///   ψ_n(z) = C_n σ(z-γ-nU)/σ(z-γ) [σ(z-p₋)/σ(z-p₊)]^n,  U = p₊ - p₋,
/// normalized so that ψ_n = (z-p₊)^{-n}(1 + O(z-p₊)).
class Rank1Function
{
public:
    /// Throws DegenerateDivisor if the punctures coincide or gamma sits on a
    /// puncture (modulo the lattice).
    Rank1Function(Torus torus, cplx p_plus, cplx p_minus, cplx gamma);

    const Torus &torus() const { return torus_; }
    cplx p_plus() const { return p_plus_; }
    cplx p_minus() const { return p_minus_; }
    cplx gamma() const { return gamma_; }
    cplx U() const { return p_plus_ - p_minus_; }

    /// C_n; throws DegenerateDivisor when σ(p₊-γ-nU) vanishes.
    cplx normalization(long n) const;

    /// ψ_n(z). Throws PoleProximity near γ or p₊.
    cplx operator()(long n, cplx z) const;

    GridFunction sequence(cplx z, long n_min, long n_max) const;

private:
    Torus torus_;
    cplx p_plus_, p_minus_, gamma_;
};

struct Rank1PairReport
{
    long n_min = 0, n_max = 0;
    std::size_t sample_count = 0;
    std::size_t held_out_count = 0;
    double fit_residual_f = 0, fit_residual_g = 0;
    double eigen_residual_f = 0, eigen_residual_g = 0; // worst over held-out points
    double commutator_norm = 0;                        // relative
    double monic_defect_f = 0;
    BandedOperator L_f, L_g;

    nlohmann::json to_json() const;
};

/// Reconstructs L_f (f = ζ(z-p₊) - ζ(z-p₋), spans (1,1)) and L_g
/// (g = ℘(z-p₊) + ℘(z-p₋), spans (2,2)) from ψ sampled at deterministic
/// points, validates both at fresh points and measures [L_f, L_g].
Rank1PairReport rank1_pair_check(const Rank1Function &psi, long n_min = -8, long n_max = 8,
                                 std::size_t samples = 16, std::size_t held_out = 5, std::uint64_t seed = 0);

} // namespace ellcomm
