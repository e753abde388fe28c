#include "ellcomm/elliptic.hpp"

#include "ellcomm/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ellcomm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI(0.0, 1.0);
constexpr int kMaxThetaTerms = 40;

bool finite(cplx z)
{
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

std::string describe(cplx z)
{
    std::ostringstream os;
    os.precision(17);
    os << "(" << z.real() << ", " << z.imag() << ")";
    return os.str();
}

// Gauss-Lagrange reduction of the basis (b1, b3), keeping Im(b3/b1) > 0.
void gauss_reduce(cplx &b1, cplx &b3)
{
    for (int iter = 0; iter < 200; ++iter) {
        const double mu = std::round((b3 * std::conj(b1)).real() / std::norm(b1));
        b3 -= mu * b1;
        if (std::abs(b3) < std::abs(b1) * (1.0 - 1e-15)) {
            const cplx old1 = b1;
            b1 = b3;
            b3 = -old1;
        } else {
            return;
        }
    }
}

} // namespace

Torus::Torus(cplx omega, cplx omega_prime, double pole_guard_rel)
    : omega_(omega), omega_prime_(omega_prime)
{
    if (!finite(omega) || !finite(omega_prime) || std::abs(omega) == 0.0) {
        throw InvalidTorus("half-periods must be finite and nonzero");
    }
    if (!(pole_guard_rel > 0.0)) {
        throw InvalidTorus("pole guard must be positive");
    }
    const cplx ratio = omega_prime / omega;
    if (!(ratio.imag() > 1e-12)) {
        throw InvalidTorus("Im(omega'/omega) must be positive, got ratio " + describe(ratio));
    }
    pole_guard_ = pole_guard_rel * std::abs(omega);

    w1_ = omega;
    w3_ = omega_prime;
    gauss_reduce(w1_, w3_);
    tau_ = w3_ / w1_;

    theta_q_.clear();
    for (int n = 0; n < kMaxThetaTerms; ++n) {
        const double h = n + 0.5;
        const cplx qn = std::exp(kI * kPi * tau_ * (h * h));
        theta_q_.push_back(qn);
        if (std::abs(qn) < 1e-300) {
            break;
        }
    }

    // θ1'(0) and θ1'''(0) give η1 = -π² θ1'''(0) / (12 ω1 θ1'(0)).
    cplx d1 = 0.0, d3 = 0.0;
    for (std::size_t n = 0; n < theta_q_.size(); ++n) {
        const double k = 2.0 * n + 1.0;
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        d1 += sign * theta_q_[n] * k;
        d3 -= sign * theta_q_[n] * (k * k * k);
    }
    theta1p0_ = 2.0 * d1;
    eta1_ = -kPi * kPi * (2.0 * d3) / (12.0 * w1_ * theta1p0_);

    // η3 = ζ(ω3) straight from the series at v = πτ/2.
    {
        const auto th = theta1_derivs(kPi * tau_ / 2.0);
        eta3_ = eta1_ * tau_ + (kPi / (2.0 * w1_)) * th[1] / th[0];
    }

    const cplx e1 = wp(*this, w1_);
    const cplx e2 = wp(*this, w1_ + w3_);
    const cplx e3 = wp(*this, w3_);
    g2_ = 2.0 * (e1 * e1 + e2 * e2 + e3 * e3);
    g3_ = 4.0 * e1 * e2 * e3;

    eta_ = zeta_w(*this, omega_);
    eta_prime_ = zeta_w(*this, omega_prime_);
    nome_ = std::exp(kI * kPi * ratio);

    const double tol = 1e-10 * (1.0 + std::abs(eta_) * std::abs(omega_prime_));
    if (!(legendre_residual() < tol)) {
        throw InvalidTorus("Legendre relation violated: residual " + std::to_string(legendre_residual()));
    }
}

double Torus::legendre_residual() const
{
    return std::abs(eta_ * omega_prime_ - eta_prime_ * omega_ - kI * (kPi / 2.0));
}

Torus::Centered Torus::center(cplx z) const
{
    const cplx x = z / (2.0 * w1_);
    const double b = x.imag() / tau_.imag();
    const double a = x.real() - b * tau_.real();
    Centered c;
    c.m = static_cast<long>(std::floor(a + 0.5));
    c.k = static_cast<long>(std::floor(b + 0.5));
    c.zc = z - 2.0 * (static_cast<double>(c.m) * w1_ + static_cast<double>(c.k) * w3_);
    return c;
}

cplx Torus::reduce(cplx z) const
{
    const cplx ratio = omega_prime_ / omega_;
    const cplx x = z / (2.0 * omega_);
    const double b = x.imag() / ratio.imag();
    const double a = x.real() - b * ratio.real();
    const double fa = std::floor(a);
    const double fb = std::floor(b);
    cplx r = z - 2.0 * (fa * omega_ + fb * omega_prime_);
    return r;
}

double Torus::lattice_distance(cplx z) const
{
    const cplx zc = center(z).zc;
    double best = std::abs(zc);
    for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
            const cplx p = 2.0 * (static_cast<double>(i) * w1_ + static_cast<double>(j) * w3_);
            best = std::min(best, std::abs(zc - p));
        }
    }
    return best;
}

void Torus::require_regular(cplx z, const char *what) const
{
    if (!finite(z)) {
        throw PoleProximity(std::string(what) + ": non-finite argument");
    }
    const double d = lattice_distance(z);
    if (d <= pole_guard_) {
        throw PoleProximity(std::string(what) + " at " + describe(z) + " is within "
                            + std::to_string(d) + " of a lattice point");
    }
}

std::array<cplx, 4> Torus::theta1_derivs(cplx v) const
{
    std::array<cplx, 4> out{0.0, 0.0, 0.0, 0.0};
    const double growth = std::exp(std::abs(v.imag()));
    double scale = 0.0;
    for (std::size_t n = 0; n < theta_q_.size(); ++n) {
        const double k = 2.0 * n + 1.0;
        const double sign = (n % 2 == 0) ? 2.0 : -2.0;
        const cplx s = std::sin(k * v);
        const cplx c = std::cos(k * v);
        const cplx q = sign * theta_q_[n];
        out[0] += q * s;
        out[1] += q * k * c;
        out[2] -= q * (k * k) * s;
        out[3] -= q * (k * k * k) * c;
        const double bound = std::abs(theta_q_[n]) * std::pow(growth, k) * k * k * k;
        if (n == 0) {
            scale = std::abs(out[0]) + std::abs(out[1]);
        } else if (bound < 1e-18 * scale) {
            break;
        }
    }
    return out;
}

namespace {

// θ1 log-derivative ratios r_k = θ1^{(k)}(v)/θ1(v) at the centered point.
struct Ratios
{
    cplx r1, r2, r3;
    cplx scale; // π / (2 ω1)
};

Ratios ratios(const Torus &t, cplx zc)
{
    const cplx scale = std::numbers::pi / (2.0 * t.reduced_omega1());
    const auto th = t.theta1_derivs(scale * zc);
    return {th[1] / th[0], th[2] / th[0], th[3] / th[0], scale};
}

} // namespace

cplx wp(const Torus &t, cplx z)
{
    t.require_regular(z, "wp argument");
    const cplx zc = t.center(z).zc;
    const auto r = ratios(t, zc);
    return -t.eta1() / t.reduced_omega1() - r.scale * r.scale * (r.r2 - r.r1 * r.r1);
}

cplx wp_prime(const Torus &t, cplx z)
{
    t.require_regular(z, "wp_prime argument");
    const cplx zc = t.center(z).zc;
    const auto r = ratios(t, zc);
    return -r.scale * r.scale * r.scale * (r.r3 - 3.0 * r.r1 * r.r2 + 2.0 * r.r1 * r.r1 * r.r1);
}

cplx wp_second(const Torus &t, cplx z)
{
    const cplx p = wp(t, z);
    return 6.0 * p * p - t.g2() / 2.0;
}

cplx zeta_w(const Torus &t, cplx z)
{
    t.require_regular(z, "zeta argument");
    const auto c = t.center(z);
    const auto r = ratios(t, c.zc);
    const cplx zc_val = t.eta1() * c.zc / t.reduced_omega1() + r.scale * r.r1;
    return zc_val + 2.0 * (static_cast<double>(c.m) * t.eta1() + static_cast<double>(c.k) * t.eta3());
}

cplx sigma_w(const Torus &t, cplx z)
{
    if (!finite(z)) {
        throw PoleProximity("sigma argument is not finite");
    }
    const auto c = t.center(z);
    const cplx w1 = t.reduced_omega1();
    const cplx v = std::numbers::pi * c.zc / (2.0 * w1);
    const auto th = t.theta1_derivs(v);
    const cplx theta1p0 = t.theta1_prime_zero();
    cplx log_mag = t.eta1() * c.zc * c.zc / (2.0 * w1);
    if (c.m != 0 || c.k != 0) {
        const double m = static_cast<double>(c.m);
        const double k = static_cast<double>(c.k);
        const cplx big_omega = m * w1 + k * t.reduced_omega3();
        const cplx big_eta = m * t.eta1() + k * t.eta3();
        log_mag += 2.0 * big_eta * (c.zc + big_omega);
    }
    const long parity = (c.m + c.k + c.m * c.k) % 2;
    const double sign = (parity == 0) ? 1.0 : -1.0;
    return sign * (2.0 * w1 / std::numbers::pi) * std::exp(log_mag) * th[0] / theta1p0;
}

cplx F(const Torus &t, cplx u, cplx v)
{
    return zeta_w(t, u + v) - zeta_w(t, u - v) - 2.0 * zeta_w(t, v);
}

cplx F_quotient(const Torus &t, cplx u, cplx v)
{
    t.require_regular(u + v, "F quotient u+v");
    t.require_regular(u - v, "F quotient u-v");
    const cplx denom = wp(t, v) - wp(t, u);
    return wp_prime(t, v) / denom;
}

cplx V(const Torus &t, cplx u, cplx v)
{
    return zeta_w(t, u + v) + zeta_w(t, u - v) - zeta_w(t, 2.0 * u);
}

LogFResiduals logF_derivative_identities(const Torus &t, cplx u, cplx v)
{
    t.require_regular(u + v, "u+v");
    t.require_regular(u - v, "u-v");
    t.require_regular(v, "v");
    t.require_regular(u, "u");
    t.require_regular(2.0 * v, "2v");

    const cplx f_uv = F(t, u, v);
    const cplx d_u = complex_derivative([&](cplx x) { return F(t, x, v); }, u) / f_uv;
    const cplx d_v = complex_derivative([&](cplx x) { return F(t, u, x); }, v) / f_uv;

    LogFResiduals r;
    r.residual_u = std::abs(d_u + F(t, v, u));
    r.residual_v = std::abs(d_v + f_uv - 2.0 * zeta_w(t, 2.0 * v) + 4.0 * zeta_w(t, v));
    return r;
}

std::vector<cplx> zeta_shift_series(const Torus &t, cplx gamma, int order)
{
    if (order < 0 || order > 3) {
        throw std::invalid_argument("zeta_shift_series: order must be in [0, 3]");
    }
    t.require_regular(gamma, "zeta shift point");
    std::vector<cplx> c(static_cast<std::size_t>(order) + 1, 0.0);
    if (order >= 1) {
        c[1] = -wp(t, gamma);
    }
    if (order >= 2) {
        c[2] = wp_prime(t, gamma) / 2.0;
    }
    if (order >= 3) {
        c[3] = -wp_second(t, gamma) / 6.0;
    }
    return c;
}

} // namespace ellcomm
