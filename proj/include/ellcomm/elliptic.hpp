#pragma once

#include <array>
#include <complex>
#include <vector>

namespace ellcomm {

using cplx = std::complex<double>;

/// An elliptic curve C / (2ωZ + 2ω'Z) together with the constants every
/// Weierstrass evaluation needs.
///
/// Construction validates Im(ω'/ω) > 0, computes a Gauss-reduced basis of
/// the same lattice (used internally so the theta series always converge
/// at |q| <= exp(-π√3/2)), and caches g2, g3, η = ζ(ω), η' = ζ(ω') and the
/// nome q = exp(iπω'/ω) of the user basis. A Torus is immutable.
class Torus
{
public:
    static constexpr double kDefaultPoleGuard = 1e-6;

    /// Throws InvalidTorus if the half-periods do not span a lattice with
    /// positive orientation, or if the Legendre relation fails numerically.
    Torus(cplx omega, cplx omega_prime, double pole_guard_rel = kDefaultPoleGuard);

    cplx omega() const { return omega_; }
    cplx omega_prime() const { return omega_prime_; }
    cplx g2() const { return g2_; }
    cplx g3() const { return g3_; }
    cplx eta() const { return eta_; }
    cplx eta_prime() const { return eta_prime_; }
    cplx nome() const { return nome_; }

    /// Absolute pole guard radius: pole_guard_rel * |ω|.
    double pole_guard() const { return pole_guard_; }

    /// |η ω' - η' ω - iπ/2|.
    double legendre_residual() const;

    /// Representative of z in the half-open parallelogram spanned by 2ω, 2ω'.
    cplx reduce(cplx z) const;

    /// Distance from z to the nearest lattice point.
    double lattice_distance(cplx z) const;

    /// Throws PoleProximity (naming `what`) when z is within the pole guard
    /// of the lattice.
    void require_regular(cplx z, const char *what) const;

    // Internal reduced basis; exposed for tests and diagnostics.
    cplx reduced_omega1() const { return w1_; }
    cplx reduced_omega3() const { return w3_; }

    struct Centered
    {
        cplx zc;      // representative with lattice coordinates in [-1/2, 1/2)
        long m = 0;   // z = zc + 2 (m w1 + k w3)
        long k = 0;
    };
    Centered center(cplx z) const;

    // Derivatives 0..3 of θ1(v | τ) for the reduced basis.
    std::array<cplx, 4> theta1_derivs(cplx v) const;

    cplx eta1() const { return eta1_; }
    cplx eta3() const { return eta3_; }
    cplx tau() const { return tau_; }
    cplx theta1_prime_zero() const { return theta1p0_; }

private:
    cplx omega_, omega_prime_;
    double pole_guard_;
    cplx w1_, w3_, tau_;
    cplx eta1_, eta3_, theta1p0_;
    std::vector<cplx> theta_q_; // exp(iπτ (n+1/2)^2), truncated
    cplx g2_, g3_, eta_, eta_prime_, nome_;
};

/// ℘(z). Throws PoleProximity within the pole guard of the lattice.
cplx wp(const Torus &t, cplx z);

/// ℘'(z).
cplx wp_prime(const Torus &t, cplx z);

/// ℘''(z) = 6℘² - g2/2.
cplx wp_second(const Torus &t, cplx z);

/// Weierstrass ζ(z), ζ' = -℘.
cplx zeta_w(const Torus &t, cplx z);

/// Weierstrass σ(z), entire; σ'/σ = ζ.
cplx sigma_w(const Torus &t, cplx z);

/// F(u, v) = ζ(u+v) - ζ(u-v) - 2ζ(v).
cplx F(const Torus &t, cplx u, cplx v);

/// The quotient form ℘'(v) / (℘(v) - ℘(u)) of the same elliptic function.
cplx F_quotient(const Torus &t, cplx u, cplx v);

/// V(u, v) = ζ(u+v) + ζ(u-v) - ζ(2u).
cplx V(const Torus &t, cplx u, cplx v);

struct LogFResiduals
{
    double residual_u = 0; // |∂u ln F(u,v) + F(v,u)|
    double residual_v = 0; // |∂v ln F(u,v) + F(u,v) - 2ζ(2v) + 4ζ(v)|
};

/// Checks both logarithmic-derivative identities of F with central
/// differences (step 1e-5, averaged over the real and imaginary directions).
LogFResiduals logF_derivative_identities(const Torus &t, cplx u, cplx v);

/// Taylor coefficients c_0..c_order at z = 0 of ζ(z - γ) + ζ(γ), in closed
/// form: c0 = 0, c1 = -℘(γ), c2 = ℘'(γ)/2, c3 = -℘''(γ)/6. order <= 3.
std::vector<cplx> zeta_shift_series(const Torus &t, cplx gamma, int order);

/// Analytic-function derivative by central differences, averaged over the
/// directions h and ih (cancels the h² error term).
template <typename Fn>
cplx complex_derivative(Fn &&f, cplx z, double h = 1e-5)
{
    const cplx ih(0.0, h);
    const cplx d_real = (f(z + h) - f(z - h)) / (2.0 * h);
    const cplx d_imag = (f(z + ih) - f(z - ih)) / (2.0 * ih);
    return 0.5 * (d_real + d_imag);
}

} // namespace ellcomm
