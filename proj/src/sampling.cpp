#include "ellcomm/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace ellcomm {

namespace {

// splitmix64 finalizer; turns a seed into well-mixed offset bits.
std::uint64_t mix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit(std::uint64_t bits)
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

} // namespace

bool clear_of(const Torus &t, cplx z, const std::vector<cplx> &avoid, double margin)
{
    for (const cplx &p : avoid) {
        if (t.lattice_distance(z - p) <= margin) {
            return false;
        }
    }
    return true;
}

std::vector<cplx> sample_points(const Torus &t, std::size_t count, std::uint64_t seed,
                                const std::function<bool(cplx)> &admissible)
{
    // Plastic-number constants of the R2 sequence.
    constexpr double g = 1.32471795724474602596;
    constexpr double a1 = 1.0 / g;
    constexpr double a2 = 1.0 / (g * g);
    const double s1 = unit(mix(seed));
    const double s2 = unit(mix(seed ^ 0x5851f42d4c957f2dULL));

    std::vector<cplx> out;
    out.reserve(count);
    const std::size_t limit = 1000 * (count + 1);
    for (std::size_t k = 1; out.size() < count; ++k) {
        if (k > limit) {
            throw std::runtime_error("sample_points: too few admissible points");
        }
        const double u = std::fmod(s1 + a1 * static_cast<double>(k), 1.0);
        const double v = std::fmod(s2 + a2 * static_cast<double>(k), 1.0);
        const cplx z = 2.0 * (u * t.omega() + v * t.omega_prime());
        if (admissible(z)) {
            out.push_back(z);
        }
    }
    return out;
}

} // namespace ellcomm
