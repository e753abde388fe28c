#include "ellcomm/operators.hpp"

#include "ellcomm/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ellcomm {

namespace {

std::string window_str(long lo, long hi)
{
    return "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
}

} // namespace

// ---------------------------------------------------------------------------
// GridFunction

GridFunction::GridFunction(long n_min, std::vector<cplx> values)
    : n_min_(n_min), values_(std::move(values))
{
}

GridFunction GridFunction::generate(long n_min, long n_max, const std::function<cplx(long)> &f)
{
    std::vector<cplx> v;
    if (n_max >= n_min) {
        v.reserve(static_cast<std::size_t>(n_max - n_min + 1));
    }
    for (long n = n_min; n <= n_max; ++n) {
        v.push_back(f(n));
    }
    return GridFunction(n_min, std::move(v));
}

cplx GridFunction::operator()(long n) const
{
    if (!contains(n)) {
        throw std::out_of_range("GridFunction index " + std::to_string(n) + " outside "
                                + window_str(n_min(), n_max()));
    }
    return values_[static_cast<std::size_t>(n - n_min_)];
}

double GridFunction::max_abs() const
{
    double m = 0.0;
    for (const cplx &v : values_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

// ---------------------------------------------------------------------------
// BandedOperator

BandedOperator::BandedOperator(long n_min, long n_max, int lower_span, int upper_span)
    : n_min_(n_min), n_max_(n_max), lower_(lower_span), upper_(upper_span)
{
    if (lower_span < 0 || upper_span < 0) {
        throw std::invalid_argument("BandedOperator spans must be non-negative");
    }
    if (n_max < n_min) {
        throw WindowUnderflow("empty operator window " + window_str(n_min, n_max));
    }
    coeffs_.assign(static_cast<std::size_t>(n_max - n_min + 1) * static_cast<std::size_t>(bandwidth()), 0.0);
}

BandedOperator BandedOperator::identity(long n_min, long n_max)
{
    BandedOperator op(n_min, n_max, 0, 0);
    for (long n = n_min; n <= n_max; ++n) {
        op.set(n, 0, 1.0);
    }
    return op;
}

BandedOperator BandedOperator::shift(int k, long n_min, long n_max)
{
    BandedOperator op(n_min, n_max, std::max(0, -k), std::max(0, k));
    for (long n = n_min; n <= n_max; ++n) {
        op.set(n, k, 1.0);
    }
    return op;
}

std::size_t BandedOperator::index(long n, int i) const
{
    return static_cast<std::size_t>(n - n_min_) * static_cast<std::size_t>(bandwidth())
           + static_cast<std::size_t>(i + lower_);
}

cplx BandedOperator::coeff(long n, int i) const
{
    if (!in_window(n)) {
        throw std::out_of_range("operator row " + std::to_string(n) + " outside " + window_str(n_min_, n_max_));
    }
    if (i < -lower_ || i > upper_) {
        return 0.0;
    }
    return coeffs_[index(n, i)];
}

void BandedOperator::set(long n, int i, cplx value)
{
    if (!in_window(n) || i < -lower_ || i > upper_) {
        throw std::out_of_range("operator entry (" + std::to_string(n) + ", " + std::to_string(i)
                                + ") outside storage");
    }
    coeffs_[index(n, i)] = value;
}

double BandedOperator::max_abs() const
{
    double m = 0.0;
    for (const cplx &c : coeffs_) {
        m = std::max(m, std::abs(c));
    }
    return m;
}

bool BandedOperator::leading_nonzero(double tol) const
{
    for (long n = n_min_; n <= n_max_; ++n) {
        if (!(std::abs(coeff(n, upper_)) > tol) || !(std::abs(coeff(n, -lower_)) > tol)) {
            return false;
        }
    }
    return true;
}

double BandedOperator::monic_defect() const
{
    double d = 0.0;
    for (long n = n_min_; n <= n_max_; ++n) {
        d = std::max(d, std::abs(coeff(n, upper_) - 1.0));
    }
    return d;
}

BandedOperator BandedOperator::restricted(long n_min, long n_max) const
{
    if (n_max < n_min || n_min < n_min_ || n_max > n_max_) {
        throw WindowUnderflow("cannot restrict " + window_str(n_min_, n_max_) + " to " + window_str(n_min, n_max));
    }
    BandedOperator out(n_min, n_max, lower_, upper_);
    for (long n = n_min; n <= n_max; ++n) {
        for (int i = -lower_; i <= upper_; ++i) {
            out.set(n, i, coeff(n, i));
        }
    }
    return out;
}

BandedOperator BandedOperator::with_spans(int lower_span, int upper_span) const
{
    BandedOperator out(n_min_, n_max_, lower_span, upper_span);
    for (long n = n_min_; n <= n_max_; ++n) {
        for (int i = -std::min(lower_, lower_span); i <= std::min(upper_, upper_span); ++i) {
            out.set(n, i, coeff(n, i));
        }
    }
    return out;
}

nlohmann::json BandedOperator::to_json() const
{
    nlohmann::json coeffs = nlohmann::json::array();
    for (const cplx &c : coeffs_) {
        coeffs.push_back({c.real(), c.imag()});
    }
    return {{"n_min", n_min_},
            {"n_max", n_max_},
            {"lower_span", lower_},
            {"upper_span", upper_},
            {"coeffs", std::move(coeffs)}};
}

BandedOperator BandedOperator::from_json(const nlohmann::json &j)
{
    BandedOperator op(j.at("n_min").get<long>(), j.at("n_max").get<long>(), j.at("lower_span").get<int>(),
                      j.at("upper_span").get<int>());
    const auto &coeffs = j.at("coeffs");
    if (coeffs.size() != op.coeffs_.size()) {
        throw std::invalid_argument("operator JSON: expected " + std::to_string(op.coeffs_.size())
                                    + " coefficients, got " + std::to_string(coeffs.size()));
    }
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        op.coeffs_[k] = cplx(coeffs[k].at(0).get<double>(), coeffs[k].at(1).get<double>());
    }
    return op;
}

// ---------------------------------------------------------------------------
// Algebra

GridFunction apply(const BandedOperator &L, const GridFunction &y, long n_lo, long n_hi)
{
    if (n_hi < n_lo) {
        throw WindowUnderflow("empty output window " + window_str(n_lo, n_hi));
    }
    if (n_lo < L.n_min() || n_hi > L.n_max()) {
        throw WindowUnderflow("output window " + window_str(n_lo, n_hi) + " exceeds operator window "
                              + window_str(L.n_min(), L.n_max()));
    }
    if (y.empty() || n_lo - L.lower_span() < y.n_min() || n_hi + L.upper_span() > y.n_max()) {
        throw WindowUnderflow("sequence window does not cover the stencil of " + window_str(n_lo, n_hi));
    }
    std::vector<cplx> out;
    out.reserve(static_cast<std::size_t>(n_hi - n_lo + 1));
    for (long n = n_lo; n <= n_hi; ++n) {
        cplx acc = 0.0;
        for (int i = -L.lower_span(); i <= L.upper_span(); ++i) {
            acc += L.coeff(n, i) * y(n + i);
        }
        out.push_back(acc);
    }
    return GridFunction(n_lo, std::move(out));
}

GridFunction apply(const BandedOperator &L, const GridFunction &y)
{
    const long lo = std::max(L.n_min(), y.n_min() + L.lower_span());
    const long hi = std::min(L.n_max(), y.n_max() - L.upper_span());
    if (y.empty() || hi < lo) {
        throw WindowUnderflow("no index has a complete stencil");
    }
    return apply(L, y, lo, hi);
}

BandedOperator compose(const BandedOperator &L, const BandedOperator &M)
{
    const long lo = std::max(L.n_min(), M.n_min() + L.lower_span());
    const long hi = std::min(L.n_max(), M.n_max() - L.upper_span());
    if (hi < lo) {
        throw WindowUnderflow("composition has empty window");
    }
    BandedOperator out(lo, hi, L.lower_span() + M.lower_span(), L.upper_span() + M.upper_span());
    for (long n = lo; n <= hi; ++n) {
        for (int i = -L.lower_span(); i <= L.upper_span(); ++i) {
            const cplx l = L.coeff(n, i);
            if (l == 0.0) {
                continue;
            }
            for (int j = -M.lower_span(); j <= M.upper_span(); ++j) {
                out.set(n, i + j, out.coeff(n, i + j) + l * M.coeff(n + i, j));
            }
        }
    }
    return out;
}

BandedOperator add(const BandedOperator &L, const BandedOperator &M, cplx scale_M)
{
    const long lo = std::max(L.n_min(), M.n_min());
    const long hi = std::min(L.n_max(), M.n_max());
    if (hi < lo) {
        throw WindowUnderflow("sum has empty window");
    }
    const int lower = std::max(L.lower_span(), M.lower_span());
    const int upper = std::max(L.upper_span(), M.upper_span());
    BandedOperator out(lo, hi, lower, upper);
    for (long n = lo; n <= hi; ++n) {
        for (int i = -lower; i <= upper; ++i) {
            out.set(n, i, L.coeff(n, i) + scale_M * M.coeff(n, i));
        }
    }
    return out;
}

BandedOperator scaled(const BandedOperator &L, cplx s)
{
    BandedOperator out(L.n_min(), L.n_max(), L.lower_span(), L.upper_span());
    for (long n = L.n_min(); n <= L.n_max(); ++n) {
        for (int i = -L.lower_span(); i <= L.upper_span(); ++i) {
            out.set(n, i, s * L.coeff(n, i));
        }
    }
    return out;
}

BandedOperator commutator(const BandedOperator &L, const BandedOperator &A)
{
    return add(compose(L, A), compose(A, L), -1.0);
}

double commutator_norm(const BandedOperator &C)
{
    return C.max_abs();
}

BandedOperator conjugate(const BandedOperator &L, const GridFunction &g)
{
    const long lo = std::max(L.n_min(), g.n_min() + L.lower_span());
    const long hi = std::min(L.n_max(), g.n_max() - L.upper_span());
    if (hi < lo) {
        throw WindowUnderflow("gauge window too small");
    }
    BandedOperator out(lo, hi, L.lower_span(), L.upper_span());
    for (long n = lo; n <= hi; ++n) {
        for (int i = -L.lower_span(); i <= L.upper_span(); ++i) {
            out.set(n, i, g(n) * L.coeff(n, i) / g(n + i));
        }
    }
    return out;
}

double eigen_residual(const BandedOperator &L, const GridFunction &psi, cplx lambda)
{
    const double scale = psi.max_abs();
    if (!(scale >= 1e-300)) {
        throw DegenerateFunction("eigenfunction vanishes on its window");
    }
    const GridFunction Lpsi = apply(L, psi);
    double worst = 0.0;
    for (long n = Lpsi.n_min(); n <= Lpsi.n_max(); ++n) {
        worst = std::max(worst, std::abs(Lpsi(n) - lambda * psi(n)));
    }
    return worst / scale;
}

// ---------------------------------------------------------------------------
// Reconstruction

Reconstruction reconstruct_operator(const std::vector<Sample> &samples, int lower_span, int upper_span,
                                    long n_min, long n_max, double max_condition, bool pin_leading)
{
    const int width = lower_span + upper_span + (pin_leading ? 0 : 1);
    if (samples.size() < static_cast<std::size_t>(width + 1)) {
        throw RankDeficient("need at least " + std::to_string(width + 1) + " samples, got "
                            + std::to_string(samples.size()));
    }
    for (const auto &s : samples) {
        if (s.psi.empty() || s.psi.n_min() > n_min - lower_span || s.psi.n_max() < n_max + upper_span) {
            throw WindowUnderflow("sample window does not cover " + window_str(n_min - lower_span, n_max + upper_span));
        }
    }

    Reconstruction result;
    result.op = BandedOperator(n_min, n_max, lower_span, upper_span);

    for (long n = n_min; n <= n_max; ++n) {
        std::vector<Eigen::VectorXcd> rows;
        std::vector<cplx> rhs;
        for (const auto &s : samples) {
            Eigen::VectorXcd row(width);
            double row_scale = 0.0;
            for (int c = 0; c < width; ++c) {
                row(c) = s.psi(n + c - lower_span);
                row_scale = std::max(row_scale, std::abs(row(c)));
            }
            cplx b = s.f * s.psi(n);
            if (pin_leading) {
                b -= s.psi(n + upper_span);
            }
            row_scale = std::max(row_scale, std::abs(b));
            if (row_scale == 0.0) {
                continue;
            }
            rows.push_back(row / row_scale);
            rhs.push_back(b / row_scale);
        }
        const auto m = static_cast<Eigen::Index>(rows.size());
        if (m < width) {
            throw RankDeficient("row " + std::to_string(n) + " has only " + std::to_string(m)
                                + " nonzero equations for " + std::to_string(width) + " unknowns");
        }
        Eigen::MatrixXcd A(m, width);
        Eigen::VectorXcd b(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            A.row(r) = rows[static_cast<std::size_t>(r)].transpose();
            b(r) = rhs[static_cast<std::size_t>(r)];
        }
        Eigen::VectorXd col_scale(width);
        for (int c = 0; c < width; ++c) {
            col_scale(c) = A.col(c).norm();
            if (col_scale(c) == 0.0) {
                throw RankDeficient("row " + std::to_string(n) + ": shift " + std::to_string(c - lower_span)
                                    + " has no support in the samples");
            }
            A.col(c) /= col_scale(c);
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto &sv = svd.singularValues();
        const double cond = sv(0) / sv(sv.size() - 1);
        result.max_condition = std::max(result.max_condition, cond);
        if (!(cond <= max_condition)) {
            throw RankDeficient("row " + std::to_string(n) + ": condition number " + std::to_string(cond));
        }
        const Eigen::VectorXcd x = svd.solve(b);
        const double bnorm = b.norm();
        const double res = (A * x - b).norm() / (bnorm > 0.0 ? bnorm : 1.0);
        result.residual = std::max(result.residual, res);
        for (int c = 0; c < width; ++c) {
            result.op.set(n, c - lower_span, x(c) / col_scale(c));
        }
        if (pin_leading) {
            result.op.set(n, upper_span, 1.0);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Commuting partner

PartnerResult find_commuting_partner(const BandedOperator &L, int lower_span, int upper_span, long n_min,
                                     long n_max, double partner_tolerance)
{
    const int Lm = L.lower_span();
    const int Lp = L.upper_span();
    // Interior rows of [L, A]: both LA and AL need all referenced rows.
    const long c_lo = std::max({n_min + Lm, L.n_min() + lower_span, n_min, L.n_min()});
    const long c_hi = std::min({n_max - Lp, L.n_max() - upper_span, n_max, L.n_max()});
    if (c_hi < c_lo) {
        throw WindowUnderflow("commutator window is empty for partner window " + window_str(n_min, n_max));
    }
    if (n_max < n_min) {
        throw WindowUnderflow("empty partner window");
    }

    const int free_width = lower_span + upper_span; // bands -lower..upper-1
    const long rows_n = n_max - n_min + 1;
    const long unknowns = rows_n * free_width;
    const int band_lo = -(Lm + lower_span);
    const int band_hi = Lp + upper_span;
    const long equations = (c_hi - c_lo + 1) * (band_hi - band_lo + 1);

    auto col = [&](long n, int j) { return (n - n_min) * free_width + (j + lower_span); };
    auto eq = [&](long n, int k) { return (n - c_lo) * (band_hi - band_lo + 1) + (k - band_lo); };

    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(equations, std::max<long>(unknowns, 1));
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(equations);

    for (long n = c_lo; n <= c_hi; ++n) {
        for (int i = -Lm; i <= Lp; ++i) {
            // LA: L(n, i) A(n+i, j) lands on band i+j.
            const cplx l_ni = L.coeff(n, i);
            for (int j = -lower_span; j <= upper_span; ++j) {
                const int k = i + j;
                if (j == upper_span) {
                    rhs(eq(n, k)) -= l_ni;
                } else {
                    M(eq(n, k), col(n + i, j)) += l_ni;
                }
            }
        }
        for (int j = -lower_span; j <= upper_span; ++j) {
            // AL: A(n, j) L(n+j, i) lands on band i+j, with a minus sign.
            for (int i = -Lm; i <= Lp; ++i) {
                const int k = i + j;
                const cplx l_val = L.coeff(n + j, i);
                if (j == upper_span) {
                    rhs(eq(n, k)) += l_val;
                } else {
                    M(eq(n, k), col(n, j)) -= l_val;
                }
            }
        }
    }

    PartnerResult result;
    result.unknowns = unknowns;
    result.equations = equations;

    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(std::max<long>(unknowns, 1));
    if (unknowns > 0) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod;
        cod.setThreshold(1e-11);
        cod.compute(M);
        if (cod.rank() == 0) {
            throw RankDeficient("partner system has zero numerical rank");
        }
        result.nullity = unknowns - cod.rank();
        x = cod.solve(rhs);
    }

    BandedOperator A(n_min, n_max, lower_span, upper_span);
    for (long n = n_min; n <= n_max; ++n) {
        for (int j = -lower_span; j < upper_span; ++j) {
            A.set(n, j, x(col(n, j)));
        }
        A.set(n, upper_span, 1.0);
    }

    const double cnorm = commutator_norm(commutator(L, A));
    result.commutator = cnorm;
    result.residual = cnorm / (L.max_abs() * A.max_abs());
    result.has_partner = result.residual <= partner_tolerance;
    result.op = std::move(A);
    return result;
}

} // namespace ellcomm
