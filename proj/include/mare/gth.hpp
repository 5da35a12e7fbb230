#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mare/error.hpp"
#include "mare/matrix.hpp"

namespace mare {

/// (N, u, v) encoding of a nonsingular M-matrix M = diag(M) - N with
/// M u = v, N >= 0 with zero diagonal, u > 0, v >= 0.
struct TripletRepresentation {
    Matrix offdiag;
    Vector u;
    Vector v;

    std::size_t order() const noexcept { return u.size(); }
};

/// Throws NotMMatrixError (or DimensionError) when `t` breaks the sign or
/// shape requirements.
inline void validate(const TripletRepresentation& t)
{
    const std::size_t n = t.u.size();
    detail::require_dims(t.v.size() == n && t.offdiag.rows() == n && t.offdiag.cols() == n,
                         "triplet: inconsistent dimensions");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(t.u[i] > 0.0) || !std::isfinite(t.u[i])) {
            throw NotMMatrixError("triplet: u must be strictly positive and finite");
        }
        if (!(t.v[i] >= 0.0) || !std::isfinite(t.v[i])) {
            throw NotMMatrixError("triplet: v must be nonnegative and finite");
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double x = t.offdiag(i, j);
            if (i == j ? x != 0.0 : !(x >= 0.0) || !std::isfinite(x)) {
                throw NotMMatrixError("triplet: N must be nonnegative with a zero diagonal");
            }
        }
    }
}

/// M_ii = (v_i + sum_{j != i} N_ij u_j) / u_i, a quotient of nonnegative sums.
inline Vector diagonal_from_triplet(const TripletRepresentation& t)
{
    validate(t);
    const std::size_t n = t.order();
    Vector d(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = t.v[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                s += t.offdiag(i, j) * t.u[j];
            }
        }
        d[i] = s / t.u[i];
    }
    return d;
}

/// Dense expansion diag(M) - N of a triplet.
inline Matrix matrix_from_triplet(const TripletRepresentation& t)
{
    const Vector d = diagonal_from_triplet(t);
    Matrix m = scaled(t.offdiag, -1.0);
    for (std::size_t i = 0; i < t.order(); ++i) {
        m(i, i) = d[i];
    }
    return m;
}

namespace detail {

/// Square working storage with all entries kept.
class DenseLuStore {
public:
    explicit DenseLuStore(Matrix m) : m_(std::move(m)) {}
    std::size_t order() const noexcept { return m_.rows(); }
    std::size_t lower_bw() const noexcept { return m_.rows() ? m_.rows() - 1 : 0; }
    std::size_t upper_bw() const noexcept { return lower_bw(); }
    double& operator()(std::size_t i, std::size_t j) noexcept { return m_(i, j); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }

private:
    Matrix m_;
};

/// Band working storage: row i keeps columns [i - lower, i + upper].
class BandLuStore {
public:
    BandLuStore(std::size_t order, std::size_t lower, std::size_t upper)
        : n_(order), lo_(lower), hi_(upper), w_(lower + upper + 1), data_(order * w_, 0.0)
    {
    }
    std::size_t order() const noexcept { return n_; }
    std::size_t lower_bw() const noexcept { return lo_; }
    std::size_t upper_bw() const noexcept { return hi_; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * w_ + j + lo_ - i]; }
    double operator()(std::size_t i, std::size_t j) const noexcept
    {
        return data_[i * w_ + j + lo_ - i];
    }

private:
    std::size_t n_, lo_, hi_, w_;
    std::vector<double> data_;
};

/// In-place GTH-like elimination. On entry `lu` holds -N (zero diagonal);
/// on exit the strict lower part holds L and the upper part holds U.
template <class Store>
void gth_eliminate(Store& lu, const Vector& u, Vector v)
{
    const std::size_t n = lu.order();
    const std::size_t lo = lu.lower_bw();
    const std::size_t hi = lu.upper_bw();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t jend = std::min(n, k + hi + 1);
        const std::size_t iend = std::min(n, k + lo + 1);
        double s = v[k];
        for (std::size_t j = k + 1; j < jend; ++j) {
            s -= lu(k, j) * u[j];
        }
        const double pivot = s / u[k];
        if (!(pivot > 0.0) || !std::isfinite(pivot)) {
            throw NotMMatrixError("gth: nonpositive pivot at step " + std::to_string(k) +
                                  "; not a nonsingular M-matrix");
        }
        lu(k, k) = pivot;
        for (std::size_t i = k + 1; i < iend; ++i) {
            const double l = lu(i, k) / pivot;
            lu(i, k) = l;
            if (l == 0.0) {
                continue;
            }
            for (std::size_t j = k + 1; j < jend; ++j) {
                if (j != i) {
                    lu(i, j) -= l * lu(k, j);
                    assert(lu(i, j) <= 0.0);
                }
            }
            v[i] -= v[k] * l;
        }
    }
}

/// L U x = b, solved column by column (all columns advance together, each
/// with the identical operation sequence).
template <class Store>
Matrix lu_solve(const Store& lu, const Matrix& b)
{
    const std::size_t n = lu.order();
    detail::require_dims(b.rows() == n, "gth_solve: right-hand side has wrong row count");
    const std::size_t c = b.cols();
    const std::size_t lo = lu.lower_bw();
    const std::size_t hi = lu.upper_bw();
    Matrix x = b;
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = x.row(i);
        for (std::size_t j = i > lo ? i - lo : 0; j < i; ++j) {
            const double l = lu(i, j);
            if (l == 0.0) {
                continue;
            }
            auto xj = x.row(j);
            for (std::size_t col = 0; col < c; ++col) {
                xi[col] -= l * xj[col];
            }
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        auto xi = x.row(i);
        const std::size_t jend = std::min(n, i + hi + 1);
        for (std::size_t j = i + 1; j < jend; ++j) {
            const double a = lu(i, j);
            if (a == 0.0) {
                continue;
            }
            auto xj = x.row(j);
            for (std::size_t col = 0; col < c; ++col) {
                xi[col] -= a * xj[col];
            }
        }
        const double pivot = lu(i, i);
        for (std::size_t col = 0; col < c; ++col) {
            xi[col] /= pivot;
        }
    }
    require_finite(x, "gth_solve");
    return x;
}

/// (L U)^T x = b: U^T forward, then L^T backward.
template <class Store>
Matrix lu_solve_transposed(const Store& lu, const Matrix& b)
{
    const std::size_t n = lu.order();
    detail::require_dims(b.rows() == n, "gth_solve_transposed: right-hand side has wrong row count");
    const std::size_t c = b.cols();
    const std::size_t lo = lu.lower_bw();
    const std::size_t hi = lu.upper_bw();
    Matrix x = b;
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = x.row(i);
        for (std::size_t j = i > hi ? i - hi : 0; j < i; ++j) {
            const double a = lu(j, i);
            if (a == 0.0) {
                continue;
            }
            auto xj = x.row(j);
            for (std::size_t col = 0; col < c; ++col) {
                xi[col] -= a * xj[col];
            }
        }
        const double pivot = lu(i, i);
        for (std::size_t col = 0; col < c; ++col) {
            xi[col] /= pivot;
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        auto xi = x.row(i);
        const std::size_t jend = std::min(n, i + lo + 1);
        for (std::size_t j = i + 1; j < jend; ++j) {
            const double l = lu(j, i);
            if (l == 0.0) {
                continue;
            }
            auto xj = x.row(j);
            for (std::size_t col = 0; col < c; ++col) {
                xi[col] -= l * xj[col];
            }
        }
    }
    require_finite(x, "gth_solve_transposed");
    return x;
}

template <class Store>
Matrix unit_lower_of(const Store& lu)
{
    const std::size_t n = lu.order();
    Matrix l = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i > lu.lower_bw() ? i - lu.lower_bw() : 0; j < i; ++j) {
            l(i, j) = lu(i, j);
        }
    }
    return l;
}

template <class Store>
Matrix upper_of(const Store& lu)
{
    const std::size_t n = lu.order();
    Matrix u(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < std::min(n, i + lu.upper_bw() + 1); ++j) {
            u(i, j) = lu(i, j);
        }
    }
    return u;
}

} // namespace detail

/// L U = M from the GTH-like elimination; L unit lower triangular and U
/// upper triangular, with nonpositive off-diagonals and a positive diagonal.
template <class Store>
class BasicGthFactorization {
public:
    explicit BasicGthFactorization(Store lu) : lu_(std::move(lu)) {}

    std::size_t order() const noexcept { return lu_.order(); }
    Matrix lower() const { return detail::unit_lower_of(lu_); }
    Matrix upper() const { return detail::upper_of(lu_); }

    Matrix solve(const Matrix& b) const { return detail::lu_solve(lu_, b); }
    Matrix solve_transposed(const Matrix& b) const { return detail::lu_solve_transposed(lu_, b); }
    Vector solve(const Vector& b) const { return solve(Matrix::column(b)).col(0); }
    Vector solve_transposed(const Vector& b) const
    {
        return solve_transposed(Matrix::column(b)).col(0);
    }

private:
    Store lu_;
};

using GthFactorization = BasicGthFactorization<detail::DenseLuStore>;
using BandedGthFactorization = BasicGthFactorization<detail::BandLuStore>;

inline GthFactorization gth_factorize(const TripletRepresentation& t)
{
    validate(t);
    detail::DenseLuStore lu(scaled(t.offdiag, -1.0));
    for (std::size_t i = 0; i < t.order(); ++i) {
        lu(i, i) = 0.0;
    }
    detail::gth_eliminate(lu, t.u, t.v);
    return GthFactorization(std::move(lu));
}

/// Banded variant: `offdiag_band` uses the BandedForm layout and holds N
/// (nonnegative, zero on the main diagonal). Cost O(n * lower * upper).
inline BandedGthFactorization gth_factorize_banded(std::size_t order, std::size_t lower,
                                                   std::size_t upper,
                                                   const std::vector<double>& offdiag_band,
                                                   const Vector& u, const Vector& v)
{
    detail::require_dims(u.size() == order && v.size() == order &&
                             offdiag_band.size() == (lower + upper + 1) * order,
                         "gth_factorize_banded: inconsistent dimensions");
    detail::BandLuStore lu(order, lower, upper);
    for (std::size_t i = 0; i < order; ++i) {
        if (!(u[i] > 0.0) || !(v[i] >= 0.0) || !std::isfinite(u[i]) || !std::isfinite(v[i])) {
            throw NotMMatrixError("banded triplet: need u > 0 and v >= 0");
        }
        for (std::size_t slot = 0; slot < lower + upper + 1; ++slot) {
            const long j = static_cast<long>(i) + static_cast<long>(slot) - static_cast<long>(lower);
            if (j < 0 || j >= static_cast<long>(order) || j == static_cast<long>(i)) {
                continue;
            }
            const double x = offdiag_band[slot * order + i];
            if (!(x >= 0.0) || !std::isfinite(x)) {
                throw NotMMatrixError("banded triplet: N must be nonnegative");
            }
            lu(i, static_cast<std::size_t>(j)) = -x;
        }
    }
    detail::gth_eliminate(lu, u, v);
    return BandedGthFactorization(std::move(lu));
}

inline Matrix gth_solve(const GthFactorization& f, const Matrix& b) { return f.solve(b); }
inline Vector gth_solve(const GthFactorization& f, const Vector& b) { return f.solve(b); }
inline Matrix gth_solve_transposed(const GthFactorization& f, const Matrix& b)
{
    return f.solve_transposed(b);
}

/// Triplet of K = I - R^T diag(d)^{-1} P, the capacitance matrix of
/// M = diag(d) - P R^T, given M u = v: K (R^T u) = R^T diag(d)^{-1} v.
inline TripletRepresentation triplet_for_r_by_r_capacitance(const Matrix& right, const Matrix& left,
                                                            const Vector& d, const Vector& u,
                                                            const Vector& v)
{
    const std::size_t n = d.size();
    const std::size_t r = left.cols();
    detail::require_dims(left.rows() == n && right.rows() == n && right.cols() == r &&
                             u.size() == n && v.size() == n,
                         "capacitance triplet: inconsistent dimensions");
    Matrix dinv_left(n, r);
    Vector dinv_v(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < r; ++t) {
            dinv_left(i, t) = left(i, t) / d[i];
        }
        dinv_v[i] = v[i] / d[i];
    }
    TripletRepresentation k{off_diagonal(matmul_tn(right, dinv_left)), matvec_t(right, u),
                            matvec_t(right, dinv_v)};
    for (double x : k.u) {
        if (!(x > 0.0)) {
            throw RankDeficientError(
                "capacitance triplet: R^T u not strictly positive (factor not full column rank "
                "or not nonnegative)");
        }
    }
    return k;
}

/// Solver for M = diag(d) - P R^T (P, R >= 0, n x r) with triplet (u, v),
/// via M^{-1} = D^{-1} + D^{-1} P K^{-1} R^T D^{-1}, K solved by GTH on its
/// own triplet. Falls back to dense GTH when K turns out singular.
class SmwSolver {
public:
    SmwSolver(Vector d, Matrix left, Matrix right, const Vector& u, const Vector& v)
        : d_(std::move(d)), left_(std::move(left)), right_(std::move(right))
    {
        const std::size_t n = d_.size();
        detail::require_dims(left_.rows() == n && right_.rows() == n &&
                                 left_.cols() == right_.cols() && u.size() == n && v.size() == n,
                             "SmwSolver: inconsistent dimensions");
        if (!all_positive(d_) || !all_nonnegative(left_) || !all_nonnegative(right_)) {
            throw NotMMatrixError("SmwSolver: need d > 0 and nonnegative factors");
        }
        try {
            kernel_.emplace(gth_factorize(triplet_for_r_by_r_capacitance(right_, left_, d_, u, v)));
        } catch (const NotMMatrixError&) {
            use_dense_fallback(u, v);
        } catch (const RankDeficientError&) {
            use_dense_fallback(u, v);
        }
    }

    std::size_t order() const noexcept { return d_.size(); }
    bool uses_fallback() const noexcept { return dense_.has_value(); }

    Matrix solve(const Matrix& b) const { return apply(b, left_, right_, false); }
    Matrix solve_transposed(const Matrix& b) const { return apply(b, right_, left_, true); }

private:
    void use_dense_fallback(const Vector& u, const Vector& v)
    {
        Matrix n = off_diagonal(matmul(left_, right_.transpose()));
        dense_.emplace(gth_factorize(TripletRepresentation{std::move(n), u, v}));
    }

    Matrix apply(const Matrix& b, const Matrix& lift, const Matrix& proj, bool transposed) const
    {
        detail::require_dims(b.rows() == order(), "SmwSolver: right-hand side has wrong row count");
        if (dense_) {
            return transposed ? dense_->solve_transposed(b) : dense_->solve(b);
        }
        const std::size_t n = order();
        const std::size_t c = b.cols();
        Matrix x(n, c);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                x(i, j) = b(i, j) / d_[i];
            }
        }
        if (lift.cols() == 0) {
            return x;
        }
        const Matrix small = matmul_tn(proj, x);
        const Matrix z = transposed ? kernel_->solve_transposed(small) : kernel_->solve(small);
        const Matrix corr = matmul(lift, z);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                x(i, j) += corr(i, j) / d_[i];
            }
        }
        require_finite(x, "SmwSolver");
        return x;
    }

    Vector d_;
    Matrix left_;
    Matrix right_;
    std::optional<GthFactorization> kernel_;
    std::optional<GthFactorization> dense_;
};

/// M^{-1} b for M = diag(d) - P R^T with M u = v.
inline Matrix smw_solve_diag_lowrank(const Vector& d, const Matrix& left, const Matrix& right,
                                     const Vector& u, const Vector& v, const Matrix& b)
{
    return SmwSolver(d, left, right, u, v).solve(b);
}

} // namespace mare
