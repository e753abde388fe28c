#include "ellcomm/rank1.hpp"

#include "ellcomm/errors.hpp"
#include "ellcomm/sampling.hpp"

#include <cmath>
#include <string>

namespace ellcomm {

Rank1Function::Rank1Function(Torus torus, cplx p_plus, cplx p_minus, cplx gamma)
    : torus_(std::move(torus)), p_plus_(p_plus), p_minus_(p_minus), gamma_(gamma)
{
    const double guard = torus_.pole_guard();
    if (torus_.lattice_distance(p_plus - p_minus) <= guard) {
        throw DegenerateDivisor("punctures coincide modulo the lattice");
    }
    if (torus_.lattice_distance(gamma - p_plus) <= guard || torus_.lattice_distance(gamma - p_minus) <= guard) {
        throw DegenerateDivisor("pole gamma coincides with a puncture");
    }
}

cplx Rank1Function::normalization(long n) const
{
    if (n == 0) {
        return 1.0;
    }
    const cplx arg = p_plus_ - gamma_ - static_cast<double>(n) * U();
    if (torus_.lattice_distance(arg) <= torus_.pole_guard()) {
        throw DegenerateDivisor("sigma(p+ - gamma - n U) vanishes at n = " + std::to_string(n));
    }
    return sigma_w(torus_, p_plus_ - gamma_) / (sigma_w(torus_, arg) * std::pow(sigma_w(torus_, U()), double(n)));
}

cplx Rank1Function::operator()(long n, cplx z) const
{
    torus_.require_regular(z - gamma_, "psi argument near gamma");
    if (n == 0) {
        return 1.0;
    }
    if (n > 0) {
        torus_.require_regular(z - p_plus_, "psi argument near p+");
    } else {
        torus_.require_regular(z - p_minus_, "psi argument near p-");
    }
    const double nd = static_cast<double>(n);
    const cplx ratio = sigma_w(torus_, z - p_minus_) / sigma_w(torus_, z - p_plus_);
    return normalization(n) * sigma_w(torus_, z - gamma_ - nd * U()) / sigma_w(torus_, z - gamma_)
           * std::pow(ratio, nd);
}

GridFunction Rank1Function::sequence(cplx z, long n_min, long n_max) const
{
    return GridFunction::generate(n_min, n_max, [&](long n) { return (*this)(n, z); });
}

nlohmann::json Rank1PairReport::to_json() const
{
    return {{"eigen_residual_f", eigen_residual_f},
            {"eigen_residual_g", eigen_residual_g},
            {"commutator_norm", commutator_norm},
            {"fit_residual_f", fit_residual_f},
            {"fit_residual_g", fit_residual_g},
            {"monic_defect_f", monic_defect_f},
            {"window", {n_min, n_max}},
            {"sample_count", sample_count},
            {"held_out_count", held_out_count}};
}

Rank1PairReport rank1_pair_check(const Rank1Function &psi, long n_min, long n_max, std::size_t samples,
                                 std::size_t held_out, std::uint64_t seed)
{
    const Torus &t = psi.torus();
    const cplx pp = psi.p_plus();
    const cplx pm = psi.p_minus();
    auto f = [&](cplx z) { return zeta_w(t, z - pp) - zeta_w(t, z - pm); };
    auto g = [&](cplx z) { return wp(t, z - pp) + wp(t, z - pm); };

    const double margin = 0.1 * std::abs(t.omega());
    const auto points = sample_points(t, samples + held_out, seed, [&](cplx z) {
        return clear_of(t, z, {pp, pm, psi.gamma()}, margin);
    });

    // L_g needs two neighbors on each side of the window.
    const long lo = n_min - 2;
    const long hi = n_max + 2;
    std::vector<Sample> fit_f, fit_g;
    for (std::size_t j = 0; j < samples; ++j) {
        const cplx z = points[j];
        GridFunction seq = psi.sequence(z, lo, hi);
        fit_f.push_back({z, seq, f(z)});
        fit_g.push_back({z, std::move(seq), g(z)});
    }

    Rank1PairReport report;
    report.n_min = n_min;
    report.n_max = n_max;
    report.sample_count = samples;
    report.held_out_count = held_out;

    auto rec_f = reconstruct_operator(fit_f, 1, 1, n_min, n_max);
    auto rec_g = reconstruct_operator(fit_g, 2, 2, n_min, n_max);
    report.fit_residual_f = rec_f.residual;
    report.fit_residual_g = rec_g.residual;
    report.L_f = std::move(rec_f.op);
    report.L_g = std::move(rec_g.op);
    report.monic_defect_f = report.L_f.monic_defect();

    for (std::size_t j = samples; j < points.size(); ++j) {
        const cplx z = points[j];
        const GridFunction seq = psi.sequence(z, lo, hi);
        report.eigen_residual_f = std::max(report.eigen_residual_f, eigen_residual(report.L_f, seq, f(z)));
        report.eigen_residual_g = std::max(report.eigen_residual_g, eigen_residual(report.L_g, seq, g(z)));
    }
    report.commutator_norm = commutator_norm(commutator(report.L_f, report.L_g))
                             / (report.L_f.max_abs() * report.L_g.max_abs());
    return report;
}

} // namespace ellcomm
