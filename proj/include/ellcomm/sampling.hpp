#pragma once

#include "ellcomm/elliptic.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace ellcomm {

/// Deterministic low-discrepancy points (additive R2 sequence) in the
/// fundamental parallelogram spanned by 2ω, 2ω'. The seed fixes the
/// starting offset. Points failing `admissible` are skipped; throws
/// std::runtime_error if `count` points cannot be found.
std::vector<cplx> sample_points(const Torus &t, std::size_t count, std::uint64_t seed,
                                const std::function<bool(cplx)> &admissible);

/// True when z keeps at least `margin` (absolute) away from every point in
/// `avoid`, modulo the lattice.
bool clear_of(const Torus &t, cplx z, const std::vector<cplx> &avoid, double margin);

} // namespace ellcomm
