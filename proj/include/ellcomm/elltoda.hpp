#pragma once

#include "ellcomm/elliptic.hpp"
#include "ellcomm/tyurin.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ellcomm {

/// Periodic chain of N sites in (x, ẋ) form.
struct ChainState
{
    std::vector<cplx> x;
    std::vector<cplx> xdot;

    std::size_t size() const { return x.size(); }
};

/// Which neighbor pair couples site n. `Nearest` is V(x_n, x_{n+1}) +
/// V(x_n, x_{n-1}); `ForwardTwice` is the variant 2 V(x_n, x_{n+1}).
enum class Coupling
{
    Nearest,
    ForwardTwice
};

/// ẍ_n = (ẋ_n² - 1)(V(x_n, x_{n+1}) + V(x_n, x_{n-1})) with periodic
/// indexing. Throws SingularConfiguration naming the colliding pair.
std::vector<cplx> acceleration(const Torus &t, const ChainState &s, Coupling coupling = Coupling::Nearest);

/// ẋ = -coth(p/2) and its inverse p = 2 artanh(-1/ẋ).
cplx velocity_from_momentum(cplx p);
cplx momentum_from_velocity(cplx xdot);

/// H = Σ_n ln sinh^{-2}(p_n/2) + ln(℘(x_n - x_{n-1}) - ℘(x_n + x_{n-1})) on
/// the principal branch.
cplx hamiltonian(const Torus &t, const std::vector<cplx> &x, const std::vector<cplx> &p);

/// H evaluated along a trajectory with every log term continued from its
/// previous value, so 2πi jumps of the principal branch are removed.
class ContinuousHamiltonian
{
public:
    explicit ContinuousHamiltonian(const Torus &t) : torus_(t) {}

    cplx operator()(const ChainState &s);
    /// Number of times a log argument crossed the negative real axis.
    int branch_crossings() const { return crossings_; }

private:
    Torus torus_;
    std::vector<cplx> last_;
    std::vector<double> turns_;
    int crossings_ = 0;
};

/// -∂H/∂x_n divided by 2(V(x_n,x_{n+1}) + V(x_n,x_{n-1})) over random
/// states; a single constant means the second-order flow is the
/// Hamiltonian one.
struct Calibration
{
    cplx constant;
    double spread = 0;  // max |ratio - constant| over sites and states
    int states = 0;
};

Calibration calibrate_hamiltonian(const Torus &t, std::size_t sites, int states, std::uint64_t seed);

/// -∂H/∂x_n by a fourth-order central difference of the log terms.
std::vector<cplx> hamiltonian_force(const Torus &t, const std::vector<cplx> &x, double h = 1e-3);

/// Seeded N-site chain with x_n = (2n/N + jitter)ω + ω'/2
/// and one-signed real speeds ẋ_n in [1.1, 1.9]. On a rectangular lattice the
/// flow keeps this slice real.
ChainState sample_chain(const Torus &t, std::size_t sites, std::uint64_t seed);

struct Trajectory
{
    std::vector<double> times;
    std::vector<ChainState> states;
    std::vector<cplx> energy;     // continuous H at each sample
    double energy_drift = 0;      // max |H(t) - H(0)|
    int branch_crossings = 0;
    bool completed = true;        // false if a singular configuration stopped it
    std::string stop_reason;
};

struct IntegrationOptions
{
    double T = 1.0;
    double dt = 1e-3;
    int stride = 10;              // keep every stride-th step
    Coupling coupling = Coupling::Nearest;
};

/// Classical RK4 on the first-order system (x, ẋ). A singular configuration
/// ends the run with the last valid state kept and `completed` cleared.
Trajectory integrate(const Torus &t, const ChainState &initial, const IntegrationOptions &opt);

/// c_{n+1}, v_{n+1} (n = 0..N-1) of the symmetric family with γ_n = x_n and
/// s_n = ẋ_n, indices taken periodically.
struct TodaCoefficients
{
    std::vector<cplx> c; // c[n] = c_{n+1}
    std::vector<cplx> v; // v[n] = v_{n+1}
};

TodaCoefficients toda_coefficients(const Torus &t, const ChainState &s, CSign sign = CSign::Derived);

struct CompatibilityReport
{
    double R_c = 0; // max |ċ_{n+1} - 2c_{n+1}(v_{n+1} - v_n)| / scale
    double R_v = 0; // max |v̇_{n+1} - 2(c_{n+2} - c_{n+1}) - ℘(γ_n) + ℘(γ_{n+1})| / scale
    int samples = 0;
};

/// Residuals of the 1D-Toda-type equations for c, v along a trajectory,
/// time derivatives by seven-point central differences over the samples.
/// Each residual is divided by max(1, largest term in its equation).
CompatibilityReport compatibility_check(const Torus &t, const Trajectory &traj, CSign sign = CSign::Derived);

/// Coefficients of the periodic 1D Toda germ: c[n] = c_{n+1}, v[n] = v_n.
struct TodaGerm
{
    std::vector<cplx> c;
    std::vector<cplx> v;
};

/// ċ_{n+1} = 2c_{n+1}(v_{n+1} - v_n), v̇_{n+1} = 2(c_{n+2} - c_{n+1}).
TodaGerm toda1d_derivatives(const TodaGerm &g);

/// Max coefficient (in k) of ∂_t X_n - M_{n+1} X_n + X_n M_n over all n and
/// entries, with X_n = [[0, 1], [-c_{n+1}, k - v_{n+1}]] and
/// M_n = [[-k + 2v_n, 2], [-2c_{n+1}, k]].
double toda1d_lax_residual(const TodaGerm &g, const TodaGerm &derivative);

} // namespace ellcomm
