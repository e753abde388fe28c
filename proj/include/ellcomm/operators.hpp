#pragma once

#include "ellcomm/elliptic.hpp"

#include <json.hpp>

#include <functional>
#include <vector>

namespace ellcomm {

/// A complex sequence y(n) on the closed index window [n_min, n_max].
class GridFunction
{
public:
    GridFunction() = default;
    GridFunction(long n_min, std::vector<cplx> values);

    static GridFunction generate(long n_min, long n_max, const std::function<cplx(long)> &f);

    long n_min() const { return n_min_; }
    long n_max() const { return n_min_ + static_cast<long>(values_.size()) - 1; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    bool contains(long n) const { return n >= n_min() && n <= n_max(); }

    /// Throws std::out_of_range outside the window.
    cplx operator()(long n) const;
    const std::vector<cplx> &values() const { return values_; }

    double max_abs() const;

private:
    long n_min_ = 0;
    std::vector<cplx> values_;
};

/// Σ_{i=-lower}^{upper} coeff(n, i) T^i with T y(n) = y(n+1), stored for n
/// in [n_min, n_max].
class BandedOperator
{
public:
    BandedOperator() = default;
    /// Zero operator with the given spans and window.
    BandedOperator(long n_min, long n_max, int lower_span, int upper_span);

    static BandedOperator identity(long n_min, long n_max);
    /// T^k with unit coefficient.
    static BandedOperator shift(int k, long n_min, long n_max);

    long n_min() const { return n_min_; }
    long n_max() const { return n_max_; }
    int lower_span() const { return lower_; }
    int upper_span() const { return upper_; }
    int bandwidth() const { return lower_ + upper_ + 1; }
    bool in_window(long n) const { return n >= n_min_ && n <= n_max_; }

    /// Zero for bands outside [-lower, upper]; throws std::out_of_range for n
    /// outside the window.
    cplx coeff(long n, int i) const;
    void set(long n, int i, cplx value);

    double max_abs() const;

    /// Checks |coeff(n, upper)| > tol and |coeff(n, -lower)| > tol on the
    /// window.
    bool leading_nonzero(double tol = 0.0) const;
    /// max_n |coeff(n, upper) - 1|.
    double monic_defect() const;

    /// Same operator on a sub-window; throws WindowUnderflow if the new
    /// window is empty or not contained.
    BandedOperator restricted(long n_min, long n_max) const;

    /// Copy with spans widened (new bands zero) or trimmed; trimming drops
    /// coefficients.
    BandedOperator with_spans(int lower_span, int upper_span) const;

    nlohmann::json to_json() const;
    static BandedOperator from_json(const nlohmann::json &j);

private:
    std::size_t index(long n, int i) const;

    long n_min_ = 0;
    long n_max_ = -1;
    int lower_ = 0;
    int upper_ = 0;
    std::vector<cplx> coeffs_; // row-major by (n, i)
};

/// (L y)(n) on every n of L's window where y covers the full stencil.
/// Throws WindowUnderflow when that set is empty.
GridFunction apply(const BandedOperator &L, const GridFunction &y);
/// (L y)(n) for n in [n_lo, n_hi]; throws WindowUnderflow if any required
/// coefficient or neighbor is missing.
GridFunction apply(const BandedOperator &L, const GridFunction &y, long n_lo, long n_hi);

/// The product L∘M; spans add and the window shrinks so that M is known at
/// every n+i the product touches.
BandedOperator compose(const BandedOperator &L, const BandedOperator &M);

/// Coefficient-wise sum on the window intersection.
BandedOperator add(const BandedOperator &L, const BandedOperator &M, cplx scale_M = 1.0);
BandedOperator scaled(const BandedOperator &L, cplx s);

/// LA - AL.
BandedOperator commutator(const BandedOperator &L, const BandedOperator &A);
/// Max absolute coefficient over window and band.
double commutator_norm(const BandedOperator &C);

/// g L g^{-1}: coeff(n, i) -> g(n) coeff(n, i) / g(n+i).
BandedOperator conjugate(const BandedOperator &L, const GridFunction &g);

/// max_n |(Lψ)(n) - λψ(n)| / max_n |ψ(n)| on the interior window.
double eigen_residual(const BandedOperator &L, const GridFunction &psi, cplx lambda);

/// One spectral sample: ψ_n(z) on a window together with the eigenvalue
/// f(z). Vector-valued eigenfunctions contribute one sample per component.
struct Sample
{
    cplx z;
    GridFunction psi;
    cplx f;
};

struct Reconstruction
{
    BandedOperator op;
    double residual = 0; // worst per-row relative least-squares residual
    double max_condition = 0;
};

/// Least-squares fit of coeff(n, i), i in [-lower, upper], from
/// f(z_j) ψ_n(z_j) = Σ_i coeff(n, i) ψ_{n+i}(z_j) for every n in the window.
/// With `pin_leading` the coefficient of T^upper is fixed to 1 and only the
/// others are fitted. Throws RankDeficient if an equilibrated per-n system
/// has condition number above `max_condition`.
Reconstruction reconstruct_operator(const std::vector<Sample> &samples, int lower_span, int upper_span,
                                    long n_min, long n_max, double max_condition = 1e12,
                                    bool pin_leading = false);

struct PartnerResult
{
    BandedOperator op;
    double residual = 0;     // max|[L, A]| / (max|L| max|A|)
    double commutator = 0;   // max|[L, A]| unnormalized
    long unknowns = 0;
    long equations = 0;
    long nullity = 0;        // dimension of the numerical null space
    bool has_partner = false; // residual <= partner_tolerance
};

/// Finds A = T^{upper} + Σ_{i<upper} a_i(n) T^i on [n_min, n_max] minimizing
/// the commutator [L, A] on its interior window (minimum-norm least
/// squares). Throws WindowUnderflow if the interior window is empty and
/// RankDeficient if the system has no usable rank.
PartnerResult find_commuting_partner(const BandedOperator &L, int lower_span, int upper_span, long n_min,
                                     long n_max, double partner_tolerance = 1e-4);

} // namespace ellcomm
