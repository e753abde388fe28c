#include "ellcomm/elltoda.hpp"

#include "ellcomm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace ellcomm {

namespace {

constexpr cplx kTwoPiI(0.0, 2.0 * std::numbers::pi);

std::size_t wrap(long n, std::size_t N)
{
    const long m = static_cast<long>(N);
    return static_cast<std::size_t>(((n % m) + m) % m);
}

void require_sites(std::size_t N)
{
    if (N < 2) {
        throw SingularConfiguration("a periodic chain needs at least two sites");
    }
}

void require_pair(const Torus &t, const ChainState &s, std::size_t n, std::size_t m)
{
    const double guard = t.pole_guard();
    const cplx a = s.x[n];
    const cplx b = s.x[m];
    if (t.lattice_distance(a - b) <= guard || t.lattice_distance(a + b) <= guard) {
        throw SingularConfiguration("sites " + std::to_string(n) + " and " + std::to_string(m)
                                    + " collide modulo the lattice (x_n ± x_m)");
    }
    if (t.lattice_distance(2.0 * a) <= guard) {
        throw SingularConfiguration("site " + std::to_string(n) + " sits on a half period (2x_n)");
    }
}

// ℘(x_m - x_{m-1}) - ℘(x_m + x_{m-1}).
cplx bond(const Torus &t, cplx xm, cplx xprev)
{
    return wp(t, xm - xprev) - wp(t, xm + xprev);
}

std::vector<cplx> admissible_positions(const Torus &t, std::size_t N, std::mt19937_64 &rng, double margin)
{
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    for (int attempt = 0; attempt < 100000; ++attempt) {
        std::vector<cplx> x(N);
        for (auto &z : x) {
            z = 2.0 * (unit() * t.omega() + unit() * t.omega_prime());
        }
        bool ok = true;
        for (std::size_t n = 0; n < N && ok; ++n) {
            const cplx a = x[n];
            const cplx b = x[wrap(static_cast<long>(n) + 1, N)];
            ok = t.lattice_distance(2.0 * a) > margin && t.lattice_distance(a - b) > margin
                 && t.lattice_distance(a + b) > margin;
        }
        if (ok) {
            return x;
        }
    }
    throw std::runtime_error("no admissible chain configuration found");
}

// Five-point central derivative weights.
template <class Fn>
cplx central_derivative(Fn f, double h)
{
    return (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h);
}

// Seven-point central derivative of a sampled sequence at index k.
template <class Fn>
cplx sixth_order_derivative(Fn f, std::size_t k, double h)
{
    return (-f(k - 3) + 9.0 * f(k - 2) - 45.0 * f(k - 1) + 45.0 * f(k + 1) - 9.0 * f(k + 2) + f(k + 3)) / (60.0 * h);
}

} // namespace

std::vector<cplx> acceleration(const Torus &t, const ChainState &s, Coupling coupling)
{
    const std::size_t N = s.size();
    require_sites(N);
    std::vector<cplx> out(N);
    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t next = wrap(static_cast<long>(n) + 1, N);
        const std::size_t prev = wrap(static_cast<long>(n) - 1, N);
        require_pair(t, s, n, next);
        require_pair(t, s, n, prev);
        const cplx forward = V(t, s.x[n], s.x[next]);
        const cplx backward = (coupling == Coupling::Nearest) ? V(t, s.x[n], s.x[prev]) : forward;
        out[n] = (s.xdot[n] * s.xdot[n] - 1.0) * (forward + backward);
    }
    return out;
}

cplx velocity_from_momentum(cplx p)
{
    const cplx sh = std::sinh(p / 2.0);
    if (std::abs(sh) < 1e-300) {
        throw SingularConfiguration("sinh(p/2) = 0");
    }
    return -std::cosh(p / 2.0) / sh;
}

cplx momentum_from_velocity(cplx xdot)
{
    if (std::abs(xdot) < 1e-300) {
        throw SingularConfiguration("zero velocity has no momentum");
    }
    return 2.0 * std::atanh(-1.0 / xdot);
}

cplx hamiltonian(const Torus &t, const std::vector<cplx> &x, const std::vector<cplx> &p)
{
    const std::size_t N = x.size();
    require_sites(N);
    cplx H = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        const cplx sh = std::sinh(p[n] / 2.0);
        H += std::log(1.0 / (sh * sh));
        H += std::log(bond(t, x[n], x[wrap(static_cast<long>(n) - 1, N)]));
    }
    return H;
}

cplx ContinuousHamiltonian::operator()(const ChainState &s)
{
    const std::size_t N = s.size();
    require_sites(N);
    std::vector<cplx> terms;
    terms.reserve(2 * N);
    for (std::size_t n = 0; n < N; ++n) {
        // sinh^{-2}(p/2) = ẋ² - 1 under the momentum map.
        terms.push_back(std::log(s.xdot[n] * s.xdot[n] - 1.0));
        terms.push_back(std::log(bond(torus_, s.x[n], s.x[wrap(static_cast<long>(n) - 1, N)])));
    }
    if (last_.size() == terms.size()) {
        for (std::size_t k = 0; k < terms.size(); ++k) {
            const double turns = std::round((last_[k].imag() - terms[k].imag()) / (2.0 * std::numbers::pi));
            if (turns != turns_[k]) {
                ++crossings_;
                turns_[k] = turns;
            }
            terms[k] += turns * kTwoPiI;
        }
    } else {
        turns_.assign(terms.size(), 0.0);
    }
    last_ = terms;
    cplx H = 0.0;
    for (const cplx &v : terms) {
        H += v;
    }
    return H;
}

std::vector<cplx> hamiltonian_force(const Torus &t, const std::vector<cplx> &x, double h)
{
    const std::size_t N = x.size();
    require_sites(N);
    std::vector<cplx> force(N, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t m = 0; m < N; ++m) {
            const std::size_t prev = wrap(static_cast<long>(m) - 1, N);
            if (m != n && prev != n) {
                continue;
            }
            auto f = [&](double d) {
                std::vector<cplx> y = x;
                y[n] += d;
                return bond(t, y[m], y[prev]);
            };
            force[n] -= central_derivative(f, h) / f(0.0);
        }
    }
    return force;
}

Calibration calibrate_hamiltonian(const Torus &t, std::size_t sites, int states, std::uint64_t seed)
{
    require_sites(sites);
    std::mt19937_64 rng(seed);
    std::vector<cplx> ratios;
    for (int k = 0; k < states; ++k) {
        const std::vector<cplx> x = admissible_positions(t, sites, rng, 0.3 * std::abs(t.omega()));
        const std::vector<cplx> force = hamiltonian_force(t, x);
        for (std::size_t n = 0; n < sites; ++n) {
            const cplx coupling = V(t, x[n], x[wrap(static_cast<long>(n) + 1, sites)])
                                  + V(t, x[n], x[wrap(static_cast<long>(n) - 1, sites)]);
            ratios.push_back(force[n] / (2.0 * coupling));
        }
    }
    Calibration c;
    c.states = states;
    cplx sum = 0.0;
    for (const cplx &r : ratios) {
        sum += r;
    }
    c.constant = sum / static_cast<double>(ratios.size());
    for (const cplx &r : ratios) {
        c.spread = std::max(c.spread, std::abs(r - c.constant));
    }
    return c;
}

ChainState sample_chain(const Torus &t, std::size_t sites, std::uint64_t seed)
{
    require_sites(sites);
    std::mt19937_64 rng(seed);
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const double spacing = 2.0 / static_cast<double>(sites);
    ChainState s;
    for (std::size_t n = 0; n < sites; ++n) {
        const double r = spacing * (static_cast<double>(n) + 0.3 * (unit() - 0.5));
        s.x.push_back(r * t.omega() + 0.5 * t.omega_prime());
        s.xdot.push_back(1.1 + 0.8 * unit());
    }
    return s;
}

Trajectory integrate(const Torus &t, const ChainState &initial, const IntegrationOptions &opt)
{
    if (!(opt.dt > 0.0) || !(opt.T >= 0.0) || opt.stride < 1) {
        throw std::invalid_argument("integrate: need dt > 0, T >= 0, stride >= 1");
    }
    const std::size_t N = initial.size();
    require_sites(N);
    if (initial.xdot.size() != N) {
        throw std::invalid_argument("integrate: x and xdot sizes differ");
    }

    Trajectory traj;
    ContinuousHamiltonian energy(t);
    auto record = [&](double time, const ChainState &s) {
        traj.times.push_back(time);
        traj.states.push_back(s);
        traj.energy.push_back(energy(s));
        traj.energy_drift = std::max(traj.energy_drift, std::abs(traj.energy.back() - traj.energy.front()));
    };

    auto derivative = [&](const ChainState &s) {
        ChainState d;
        d.x = s.xdot;
        d.xdot = acceleration(t, s, opt.coupling);
        return d;
    };
    auto axpy = [N](const ChainState &s, const ChainState &d, double h) {
        ChainState out = s;
        for (std::size_t n = 0; n < N; ++n) {
            out.x[n] += h * d.x[n];
            out.xdot[n] += h * d.xdot[n];
        }
        return out;
    };

    ChainState state = initial;
    const auto steps = static_cast<long>(std::llround(opt.T / opt.dt));
    try {
        acceleration(t, state, opt.coupling);
        record(0.0, state);
        for (long step = 1; step <= steps; ++step) {
            const double h = opt.dt;
            const ChainState k1 = derivative(state);
            const ChainState k2 = derivative(axpy(state, k1, h / 2.0));
            const ChainState k3 = derivative(axpy(state, k2, h / 2.0));
            const ChainState k4 = derivative(axpy(state, k3, h));
            ChainState next = state;
            for (std::size_t n = 0; n < N; ++n) {
                next.x[n] += h / 6.0 * (k1.x[n] + 2.0 * k2.x[n] + 2.0 * k3.x[n] + k4.x[n]);
                next.xdot[n] += h / 6.0 * (k1.xdot[n] + 2.0 * k2.xdot[n] + 2.0 * k3.xdot[n] + k4.xdot[n]);
            }
            state = std::move(next);
            if (step % opt.stride == 0 || step == steps) {
                record(static_cast<double>(step) * opt.dt, state);
            }
        }
    } catch (const Error &e) {
        traj.completed = false;
        traj.stop_reason = e.what();
    }
    traj.branch_crossings = energy.branch_crossings();
    return traj;
}

TodaCoefficients toda_coefficients(const Torus &t, const ChainState &s, CSign sign)
{
    const std::size_t N = s.size();
    require_sites(N);
    SymmetricParams p;
    p.n_first = -2;
    for (long n = -2; n <= static_cast<long>(N) + 1; ++n) {
        p.gamma.push_back(s.x[wrap(n, N)]);
        p.s.push_back(s.xdot[wrap(n, N)]);
    }
    TodaCoefficients out;
    for (long n = 0; n < static_cast<long>(N); ++n) {
        out.c.push_back(symmetric_c(t, p, n, sign));
        out.v.push_back(symmetric_v(t, p, n));
    }
    return out;
}

CompatibilityReport compatibility_check(const Torus &t, const Trajectory &traj, CSign sign)
{
    const std::size_t K = traj.states.size();
    if (K < 7) {
        throw WindowUnderflow("compatibility check needs at least seven samples");
    }
    const double dt = traj.times[1] - traj.times[0];
    for (std::size_t k = 2; k < K; ++k) {
        if (std::abs((traj.times[k] - traj.times[k - 1]) - dt) > 1e-9 * dt) {
            throw WindowUnderflow("compatibility check needs equally spaced samples");
        }
    }
    std::vector<TodaCoefficients> coeffs;
    coeffs.reserve(K);
    for (const ChainState &s : traj.states) {
        coeffs.push_back(toda_coefficients(t, s, sign));
    }

    CompatibilityReport r;
    const std::size_t N = traj.states.front().size();
    for (std::size_t k = 3; k + 3 < K; ++k) {
        ++r.samples;
        const ChainState &s = traj.states[k];
        const TodaCoefficients &now = coeffs[k];
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t prev = wrap(static_cast<long>(n) - 1, N);
            const std::size_t next = wrap(static_cast<long>(n) + 1, N);
            const cplx cdot = sixth_order_derivative([&](std::size_t j) { return coeffs[j].c[n]; }, k, dt);
            const cplx vdot = sixth_order_derivative([&](std::size_t j) { return coeffs[j].v[n]; }, k, dt);

            // now.v[prev] is v_n, now.v[n] is v_{n+1}; now.c[next] is c_{n+2}.
            const cplx c_rhs = 2.0 * now.c[n] * (now.v[n] - now.v[prev]);
            const double c_scale = std::max({1.0, std::abs(cdot), std::abs(c_rhs)});
            r.R_c = std::max(r.R_c, std::abs(cdot - c_rhs) / c_scale);

            const cplx wp_n = wp(t, s.x[n]);
            const cplx wp_next = wp(t, s.x[next]);
            const cplx c_diff = 2.0 * (now.c[next] - now.c[n]);
            const cplx v_rhs = c_diff + wp_n - wp_next;
            const double v_scale = std::max({1.0, std::abs(vdot), std::abs(c_diff), std::abs(wp_n), std::abs(wp_next)});
            r.R_v = std::max(r.R_v, std::abs(vdot - v_rhs) / v_scale);
        }
    }
    return r;
}

TodaGerm toda1d_derivatives(const TodaGerm &g)
{
    const std::size_t N = g.c.size();
    require_sites(N);
    TodaGerm d;
    d.c.resize(N);
    d.v.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t next = wrap(static_cast<long>(n) + 1, N);
        // c[n] = c_{n+1}, v[n] = v_n.
        d.c[n] = 2.0 * g.c[n] * (g.v[next] - g.v[n]);
        d.v[next] = 2.0 * (g.c[next] - g.c[n]);
    }
    return d;
}

namespace {

// 2x2 matrices with entries polynomial in k of degree <= 2.
using Poly = std::array<cplx, 3>;
using PolyMat = std::array<Poly, 4>; // row-major

Poly poly_mul(const Poly &a, const Poly &b)
{
    Poly out{};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; i + j < 3; ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

PolyMat mat_mul(const PolyMat &A, const PolyMat &B)
{
    PolyMat C{};
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            for (std::size_t l = 0; l < 2; ++l) {
                const Poly p = poly_mul(A[2 * i + l], B[2 * l + j]);
                for (std::size_t d = 0; d < 3; ++d) {
                    C[2 * i + j][d] += p[d];
                }
            }
        }
    }
    return C;
}

PolyMat transfer(cplx c_next, cplx v_next)
{
    return {Poly{0.0, 0.0, 0.0}, Poly{1.0, 0.0, 0.0}, Poly{-c_next, 0.0, 0.0}, Poly{-v_next, 1.0, 0.0}};
}

PolyMat time_generator(cplx v_n, cplx c_next)
{
    return {Poly{2.0 * v_n, -1.0, 0.0}, Poly{2.0, 0.0, 0.0}, Poly{-2.0 * c_next, 0.0, 0.0}, Poly{0.0, 1.0, 0.0}};
}

} // namespace

double toda1d_lax_residual(const TodaGerm &g, const TodaGerm &derivative)
{
    const std::size_t N = g.c.size();
    require_sites(N);
    if (g.v.size() != N || derivative.c.size() != N || derivative.v.size() != N) {
        throw std::invalid_argument("toda1d_lax_residual: sequence sizes differ");
    }
    for (const cplx &c : g.c) {
        if (std::abs(c) == 0.0) {
            throw DegenerateState("Toda germ needs c_n != 0");
        }
    }
    double worst = 0;
    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t next = wrap(static_cast<long>(n) + 1, N);
        const PolyMat X = transfer(g.c[n], g.v[next]);
        const PolyMat dX = {Poly{}, Poly{}, Poly{-derivative.c[n], 0.0, 0.0}, Poly{-derivative.v[next], 0.0, 0.0}};
        const PolyMat Mn = time_generator(g.v[n], g.c[n]);
        const PolyMat Mnext = time_generator(g.v[next], g.c[next]);
        const PolyMat left = mat_mul(Mnext, X);
        const PolyMat right = mat_mul(X, Mn);
        for (std::size_t e = 0; e < 4; ++e) {
            for (std::size_t d = 0; d < 3; ++d) {
                worst = std::max(worst, std::abs(dX[e][d] - left[e][d] + right[e][d]));
            }
        }
    }
    return worst;
}

} // namespace ellcomm
