#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mare/error.hpp"
#include "mare/matrix.hpp"

namespace mare {

enum class StructureKind { Dense, Banded, DiagPlusLowRank };

struct DenseForm {
    Matrix entries;
};

/// Band storage: diagonal offset d in [-lower, upper] occupies the
/// contiguous slice [(d + lower) * order, (d + lower + 1) * order), and
/// entry (i, i + d) sits at position i of that slice. Slots whose column
/// falls outside the matrix are zero.
struct BandedForm {
    std::size_t lower = 0;
    std::size_t upper = 0;
    std::vector<double> band;
};

/// diag(d) + sign * left * right^T
struct DiagPlusLowRankForm {
    Vector diag;
    Matrix left;
    Matrix right;
    int sign = -1;
};

/// A square matrix kept in the cheapest form that represents it exactly.
class StructuredSquare {
public:
    StructuredSquare() = default;

    static StructuredSquare dense(Matrix entries)
    {
        detail::require_dims(entries.rows() == entries.cols(), "dense structure: matrix not square");
        StructuredSquare s;
        s.order_ = entries.rows();
        s.form_ = DenseForm{std::move(entries)};
        return s;
    }

    static StructuredSquare banded(std::size_t order, std::size_t lower, std::size_t upper,
                                   std::vector<double> band)
    {
        detail::require(order == 0 || (lower < order && upper < order),
                        "banded structure: bandwidth exceeds order");
        detail::require_dims(band.size() == (lower + upper + 1) * order,
                             "banded structure: storage length mismatch");
        for (std::size_t slot = 0; slot < lower + upper + 1; ++slot) {
            const long d = static_cast<long>(slot) - static_cast<long>(lower);
            for (std::size_t i = 0; i < order; ++i) {
                const long j = static_cast<long>(i) + d;
                if ((j < 0 || j >= static_cast<long>(order)) && band[slot * order + i] != 0.0) {
                    throw InvalidArgument("banded structure: nonzero padding slot");
                }
            }
        }
        StructuredSquare s;
        s.order_ = order;
        s.form_ = BandedForm{lower, upper, std::move(band)};
        return s;
    }

    /// Extracts the band of `m`; entries outside the band must be exactly zero.
    static StructuredSquare banded_from_dense(const Matrix& m, std::size_t lower, std::size_t upper)
    {
        detail::require_dims(m.rows() == m.cols(), "banded_from_dense: matrix not square");
        const std::size_t n = m.rows();
        std::vector<double> band((lower + upper + 1) * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const long d = static_cast<long>(j) - static_cast<long>(i);
                if (d < -static_cast<long>(lower) || d > static_cast<long>(upper)) {
                    if (m(i, j) != 0.0) {
                        throw InvalidArgument("banded_from_dense: entry outside band is nonzero");
                    }
                    continue;
                }
                band[static_cast<std::size_t>(d + static_cast<long>(lower)) * n + i] = m(i, j);
            }
        }
        return banded(n, lower, upper, std::move(band));
    }

    static StructuredSquare diag_plus_low_rank(Vector diag, Matrix left, Matrix right, int sign)
    {
        const std::size_t n = diag.size();
        detail::require_dims(left.rows() == n && right.rows() == n,
                             "diag_plus_low_rank: factor row count differs from order");
        detail::require_dims(left.cols() == right.cols(), "diag_plus_low_rank: factor ranks differ");
        detail::require(left.cols() <= n || n == 0, "diag_plus_low_rank: rank exceeds order");
        detail::require(sign == 1 || sign == -1, "diag_plus_low_rank: sign must be +1 or -1");
        StructuredSquare s;
        s.order_ = n;
        s.form_ = DiagPlusLowRankForm{std::move(diag), std::move(left), std::move(right), sign};
        return s;
    }

    static StructuredSquare diagonal(Vector d)
    {
        const std::size_t n = d.size();
        return diag_plus_low_rank(std::move(d), Matrix(n, 0), Matrix(n, 0), -1);
    }

    std::size_t order() const noexcept { return order_; }

    StructureKind kind() const noexcept { return static_cast<StructureKind>(form_.index()); }

    const DenseForm* as_dense() const noexcept { return std::get_if<DenseForm>(&form_); }
    const BandedForm* as_banded() const noexcept { return std::get_if<BandedForm>(&form_); }
    const DiagPlusLowRankForm* as_low_rank() const noexcept
    {
        return std::get_if<DiagPlusLowRankForm>(&form_);
    }

    /// Entry (i, j); O(1) for dense/banded, O(r) for the low-rank form.
    double at(std::size_t i, std::size_t j) const
    {
        if (const auto* d = as_dense()) {
            return d->entries(i, j);
        }
        if (const auto* b = as_banded()) {
            const long off = static_cast<long>(j) - static_cast<long>(i);
            if (off < -static_cast<long>(b->lower) || off > static_cast<long>(b->upper)) {
                return 0.0;
            }
            return b->band[static_cast<std::size_t>(off + static_cast<long>(b->lower)) * order_ + i];
        }
        const auto& lr = std::get<DiagPlusLowRankForm>(form_);
        double s = 0.0;
        for (std::size_t t = 0; t < lr.left.cols(); ++t) {
            s += lr.left(i, t) * lr.right(j, t);
        }
        s = lr.sign > 0 ? s : -s;
        return i == j ? lr.diag[i] + s : s;
    }

    /// The true diagonal of the matrix (for the low-rank form, the diagonal
    /// of the low-rank term is folded in).
    Vector diagonal_entries() const
    {
        Vector d(order_);
        for (std::size_t i = 0; i < order_; ++i) {
            d[i] = at(i, i);
        }
        return d;
    }

    Matrix to_dense() const
    {
        if (const auto* d = as_dense()) {
            return d->entries;
        }
        Matrix m(order_, order_);
        if (const auto* b = as_banded()) {
            for (std::size_t i = 0; i < order_; ++i) {
                const std::size_t j0 = i >= b->lower ? i - b->lower : 0;
                const std::size_t j1 = std::min(order_ - 1, i + b->upper);
                for (std::size_t j = j0; j <= j1 && order_ > 0; ++j) {
                    m(i, j) = at(i, j);
                }
            }
            return m;
        }
        for (std::size_t i = 0; i < order_; ++i) {
            for (std::size_t j = 0; j < order_; ++j) {
                m(i, j) = at(i, j);
            }
        }
        return m;
    }

private:
    std::size_t order_ = 0;
    std::variant<DenseForm, BandedForm, DiagPlusLowRankForm> form_;
};

namespace detail {

/// offdiag(P R^T) x with every term nonnegative when P, R, x are: each row
/// excludes its own index through prefix + suffix partial sums, so no
/// quantity is ever subtracted.
inline Matrix low_rank_offdiag_apply(const Matrix& p, const Matrix& r, const Matrix& x)
{
    const std::size_t n = x.rows();
    const std::size_t c = x.cols();
    Matrix y(n, c);
    Matrix suffix(n + 1, c);
    std::vector<double> prefix(c);
    for (std::size_t t = 0; t < p.cols(); ++t) {
        for (std::size_t j = 0; j < c; ++j) {
            suffix(n, j) = 0.0;
        }
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = 0; j < c; ++j) {
                suffix(i, j) = suffix(i + 1, j) + r(i, t) * x(i, j);
            }
        }
        std::fill(prefix.begin(), prefix.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double pit = p(i, t);
            for (std::size_t j = 0; j < c; ++j) {
                y(i, j) += pit * (prefix[j] + suffix(i + 1, j));
                prefix[j] += r(i, t) * x(i, j);
            }
        }
    }
    return y;
}

} // namespace detail

/// s * x, or s^T * x when `transpose` is set.
inline Matrix apply_structured(const StructuredSquare& s, const Matrix& x, bool transpose = false)
{
    detail::require_dims(s.order() == x.rows(), "apply_structured: dimension mismatch");
    const std::size_t n = s.order();
    const std::size_t c = x.cols();
    if (const auto* d = s.as_dense()) {
        return transpose ? matmul_tn(d->entries, x) : matmul(d->entries, x);
    }
    Matrix y(n, c);
    if (const auto* b = s.as_banded()) {
        const long lo = static_cast<long>(b->lower);
        const long hi = static_cast<long>(b->upper);
        for (std::size_t i = 0; i < n; ++i) {
            // Walk columns (or rows, when transposed) in ascending order.
            for (long d = transpose ? -hi : -lo; d <= (transpose ? lo : hi); ++d) {
                const long k = static_cast<long>(i) + d;
                if (k < 0 || k >= static_cast<long>(n)) {
                    continue;
                }
                const double a = transpose ? s.at(static_cast<std::size_t>(k), i)
                                           : s.at(i, static_cast<std::size_t>(k));
                for (std::size_t j = 0; j < c; ++j) {
                    y(i, j) += a * x(static_cast<std::size_t>(k), j);
                }
            }
        }
        require_finite(y, "apply_structured");
        return y;
    }
    const auto& lr = *s.as_low_rank();
    const Matrix& lhs = transpose ? lr.right : lr.left;
    const Matrix& rhs = transpose ? lr.left : lr.right;
    const Matrix proj = matmul_tn(rhs, x);
    const Matrix lifted = matmul(lhs, proj);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double low = lr.sign > 0 ? lifted(i, j) : -lifted(i, j);
            y(i, j) = lr.diag[i] * x(i, j) + low;
        }
    }
    require_finite(y, "apply_structured");
    return y;
}

/// N x (or N^T x) with N = diag(s) - s, the negated off-diagonal part.
/// For Z-matrices N >= 0 and the result of a nonnegative x is nonnegative.
inline Matrix apply_offdiag_negated(const StructuredSquare& s, const Matrix& x, bool transpose = false)
{
    detail::require_dims(s.order() == x.rows(), "apply_offdiag_negated: dimension mismatch");
    const std::size_t n = s.order();
    const std::size_t c = x.cols();
    if (const auto* lr = s.as_low_rank()) {
        Matrix y = transpose ? detail::low_rank_offdiag_apply(lr->right, lr->left, x)
                             : detail::low_rank_offdiag_apply(lr->left, lr->right, x);
        if (lr->sign > 0) {
            y = scaled(std::move(y), -1.0);
        }
        require_finite(y, "apply_offdiag_negated");
        return y;
    }
    Matrix y(n, c);
    long lo = static_cast<long>(n);
    long hi = static_cast<long>(n);
    if (const auto* b = s.as_banded()) {
        lo = static_cast<long>(transpose ? b->upper : b->lower);
        hi = static_cast<long>(transpose ? b->lower : b->upper);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (long d = -lo; d <= hi; ++d) {
            const long k = static_cast<long>(i) + d;
            if (d == 0 || k < 0 || k >= static_cast<long>(n)) {
                continue;
            }
            const auto kk = static_cast<std::size_t>(k);
            const double a = -(transpose ? s.at(kk, i) : s.at(i, kk));
            for (std::size_t j = 0; j < c; ++j) {
                y(i, j) += a * x(kk, j);
            }
        }
    }
    require_finite(y, "apply_offdiag_negated");
    return y;
}

} // namespace mare
