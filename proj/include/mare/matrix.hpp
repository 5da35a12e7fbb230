#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mare/error.hpp"

namespace mare {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
///
/// Every reduction in this library walks indices in ascending order, so
/// repeated evaluations on identical inputs are bit-identical.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
        : rows_(rows), cols_(cols), data_(std::move(row_major))
    {
        detail::require_dims(data_.size() == rows_ * cols_,
                             "Matrix: data length does not match shape");
    }

    Matrix(std::initializer_list<std::initializer_list<double>> rows)
        : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0)
    {
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            detail::require_dims(r.size() == cols_, "Matrix: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    static Matrix ones(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, 1.0); }

    /// n x 1 matrix holding `v`.
    static Matrix column(const Vector& v) { return Matrix(v.size(), 1, v); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept
    {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    Vector col(std::size_t j) const
    {
        Vector v(rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            v[i] = (*this)(i, j);
        }
        return v;
    }

    Matrix transpose() const
    {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                t(j, i) = (*this)(i, j);
            }
        }
        return t;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline bool all_finite(const Matrix& m)
{
    return std::all_of(m.data().begin(), m.data().end(),
                       [](double x) { return std::isfinite(x); });
}

inline void require_finite(const Matrix& m, const char* where)
{
    if (!all_finite(m)) {
        throw NonFiniteError(std::string(where) + ": non-finite entry in result");
    }
}

inline bool all_nonnegative(const Matrix& m)
{
    return std::all_of(m.data().begin(), m.data().end(), [](double x) { return x >= 0.0; });
}

inline bool all_nonnegative(const Vector& v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
}

inline bool all_positive(const Vector& v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
}

/// lhs * rhs. Each output entry accumulates over the inner index in
/// ascending order starting from +0.
inline Matrix matmul(const Matrix& lhs, const Matrix& rhs)
{
    detail::require_dims(lhs.cols() == rhs.rows(), "matmul: inner dimensions disagree");
    Matrix out(lhs.rows(), rhs.cols());
    for (std::size_t i = 0; i < lhs.rows(); ++i) {
        auto out_row = out.row(i);
        for (std::size_t k = 0; k < lhs.cols(); ++k) {
            const double a = lhs(i, k);
            auto rhs_row = rhs.row(k);
            for (std::size_t j = 0; j < rhs.cols(); ++j) {
                out_row[j] += a * rhs_row[j];
            }
        }
    }
    require_finite(out, "matmul");
    return out;
}

/// lhs^T * rhs without materialising the transpose.
inline Matrix matmul_tn(const Matrix& lhs, const Matrix& rhs)
{
    detail::require_dims(lhs.rows() == rhs.rows(), "matmul_tn: inner dimensions disagree");
    Matrix out(lhs.cols(), rhs.cols());
    for (std::size_t i = 0; i < lhs.cols(); ++i) {
        auto out_row = out.row(i);
        for (std::size_t k = 0; k < lhs.rows(); ++k) {
            const double a = lhs(k, i);
            auto rhs_row = rhs.row(k);
            for (std::size_t j = 0; j < rhs.cols(); ++j) {
                out_row[j] += a * rhs_row[j];
            }
        }
    }
    require_finite(out, "matmul_tn");
    return out;
}

inline Vector matvec(const Matrix& a, const Vector& x)
{
    detail::require_dims(a.cols() == x.size(), "matvec: dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        auto r = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) {
            s += r[j] * x[j];
        }
        y[i] = s;
    }
    return y;
}

/// a^T x
inline Vector matvec_t(const Matrix& a, const Vector& x)
{
    detail::require_dims(a.rows() == x.size(), "matvec_t: dimension mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto r = a.row(k);
        for (std::size_t j = 0; j < a.cols(); ++j) {
            y[j] += r[j] * x[k];
        }
    }
    return y;
}

inline Matrix scaled(Matrix m, double s)
{
    for (double& x : m.data()) {
        x *= s;
    }
    return m;
}

/// Copy of rows [r0, r0+nr) and columns [c0, c0+nc).
inline Matrix block(const Matrix& m, std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc)
{
    detail::require_dims(r0 + nr <= m.rows() && c0 + nc <= m.cols(), "block: out of range");
    Matrix out(nr, nc);
    for (std::size_t i = 0; i < nr; ++i) {
        for (std::size_t j = 0; j < nc; ++j) {
            out(i, j) = m(r0 + i, c0 + j);
        }
    }
    return out;
}

inline void set_block(Matrix& dst, std::size_t r0, std::size_t c0, const Matrix& src)
{
    detail::require_dims(r0 + src.rows() <= dst.rows() && c0 + src.cols() <= dst.cols(),
                         "set_block: out of range");
    for (std::size_t i = 0; i < src.rows(); ++i) {
        for (std::size_t j = 0; j < src.cols(); ++j) {
            dst(r0 + i, c0 + j) = src(i, j);
        }
    }
}

/// [lhs, rhs]
inline Matrix hstack(const Matrix& lhs, const Matrix& rhs)
{
    detail::require_dims(lhs.rows() == rhs.rows(), "hstack: row counts differ");
    Matrix out(lhs.rows(), lhs.cols() + rhs.cols());
    set_block(out, 0, 0, lhs);
    set_block(out, 0, lhs.cols(), rhs);
    return out;
}

/// Copy of `m` with the diagonal zeroed.
inline Matrix off_diagonal(Matrix m)
{
    detail::require_dims(m.rows() == m.cols(), "off_diagonal: matrix not square");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        m(i, i) = 0.0;
    }
    return m;
}

inline double frobenius_norm(const Matrix& m)
{
    double s = 0.0;
    for (double x : m.data()) {
        s += x * x;
    }
    return std::sqrt(s);
}

inline double max_abs(const Matrix& m)
{
    double s = 0.0;
    for (double x : m.data()) {
        s = std::max(s, std::abs(x));
    }
    return s;
}

inline double max_abs(const Vector& v)
{
    double s = 0.0;
    for (double x : v) {
        s = std::max(s, std::abs(x));
    }
    return s;
}

/// max_{ij} |num_ij| / den_ij; every den_ij must be strictly positive.
inline double max_entrywise_ratio(const Matrix& num, const Matrix& den)
{
    detail::require_dims(num.rows() == den.rows() && num.cols() == den.cols(),
                         "max_entrywise_ratio: shapes differ");
    double worst = 0.0;
    for (std::size_t k = 0; k < num.size(); ++k) {
        const double d = den.data()[k];
        if (!(d > 0.0)) {
            throw InvalidArgument("max_entrywise_ratio: nonpositive denominator entry");
        }
        worst = std::max(worst, std::abs(num.data()[k]) / d);
    }
    return worst;
}

} // namespace mare
