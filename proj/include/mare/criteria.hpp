#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Dense>

#include "mare/error.hpp"
#include "mare/matrix.hpp"
#include "mare/problem.hpp"
#include "mare/structured.hpp"

namespace mare {

namespace detail {

inline void require_solution_shape(const MareProblem& prob, const Matrix& h, const char* where)
{
    require_dims(h.rows() == prob.m() && h.cols() == prob.n(),
                 std::string(where) + ": H must be m x n");
}

/// H * S for a structured S, computed as (S^T H^T)^T.
inline Matrix right_apply(const StructuredSquare& s, const Matrix& h)
{
    return apply_structured(s, h.transpose(), true).transpose();
}

} // namespace detail

/// Entrywise relative residual
///   max |(HCH + N_A H + H N_D + B) - (diag(A) H + H diag(D))| / (diag(A) H + H diag(D)).
/// Entries with 0/0 are skipped; a zero denominator under a nonzero
/// numerator gives +inf.
inline double erres(const MareProblem& prob, const Matrix& h)
{
    detail::require_solution_shape(prob, h, "erres");
    const std::size_t m = prob.m();
    const std::size_t n = prob.n();
    const Matrix hch = matmul(matmul(h, prob.cl), matmul_tn(prob.cr, h));
    const Matrix nah = apply_offdiag_negated(prob.a, h);
    const Matrix hnd = apply_offdiag_negated(prob.d, h.transpose(), true).transpose();
    const Matrix b = matmul(prob.bl, prob.br.transpose());
    const Vector ad = prob.a.diagonal_entries();
    const Vector dd = prob.d.diagonal_entries();
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double lhs = hch(i, j) + nah(i, j) + hnd(i, j) + b(i, j);
            const double rhs = ad[i] * h(i, j) + h(i, j) * dd[j];
            const double num = std::abs(lhs - rhs);
            if (rhs > 0.0) {
                worst = std::max(worst, num / rhs);
            } else if (num > 0.0) {
                return std::numeric_limits<double>::infinity();
            }
        }
    }
    return worst;
}

/// ||HCH - HD - AH + B||_F / (||HCH||_F + ||HD||_F + ||AH||_F + ||B||_F).
inline double normalized_residual(const MareProblem& prob, const Matrix& h)
{
    detail::require_solution_shape(prob, h, "normalized_residual");
    const Matrix hch = matmul(matmul(h, prob.cl), matmul_tn(prob.cr, h));
    const Matrix hd = detail::right_apply(prob.d, h);
    const Matrix ah = apply_structured(prob.a, h);
    const Matrix b = matmul(prob.bl, prob.br.transpose());
    Matrix r(prob.m(), prob.n());
    for (std::size_t k = 0; k < r.size(); ++k) {
        r.data()[k] = hch.data()[k] - hd.data()[k] - ah.data()[k] + b.data()[k];
    }
    const double den =
        frobenius_norm(hch) + frobenius_norm(hd) + frobenius_norm(ah) + frobenius_norm(b);
    const double num = frobenius_norm(r);
    if (den == 0.0) {
        return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return num / den;
}

/// max_ij |H_next - H_prev| / H_next (0/0 skipped, x/0 -> +inf).
inline double relative_change_value(const Matrix& h_prev, const Matrix& h_next)
{
    detail::require_dims(h_prev.rows() == h_next.rows() && h_prev.cols() == h_next.cols(),
                         "relative_change: shapes differ");
    double worst = 0.0;
    for (std::size_t k = 0; k < h_next.size(); ++k) {
        const double num = std::abs(h_next.data()[k] - h_prev.data()[k]);
        const double den = h_next.data()[k];
        if (den > 0.0) {
            worst = std::max(worst, num / den);
        } else if (num > 0.0) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return worst;
}

/// |H_next - H_prev| <= eps * H_next entrywise.
inline bool relative_change(const Matrix& h_prev, const Matrix& h_next, double eps)
{
    detail::require_dims(h_prev.rows() == h_next.rows() && h_prev.cols() == h_next.cols(),
                         "relative_change: shapes differ");
    for (std::size_t k = 0; k < h_next.size(); ++k) {
        if (std::abs(h_next.data()[k] - h_prev.data()[k]) > eps * h_next.data()[k]) {
            return false;
        }
    }
    return true;
}

/// max |H - X| / X; where X is zero, H must be within 1e-300 of zero or the
/// result is +inf.
inline double ererr(const Matrix& h, const Matrix& x_true)
{
    detail::require_dims(h.rows() == x_true.rows() && h.cols() == x_true.cols(),
                         "ererr: shapes differ");
    double worst = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double x = x_true.data()[k];
        const double diff = std::abs(h.data()[k] - x);
        if (x > 0.0) {
            worst = std::max(worst, diff / x);
        } else if (diff > 1e-300) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return worst;
}

/// Number of singular values above 1e-10 times the largest.
inline std::size_t numerical_rank(const Matrix& h)
{
    if (h.empty()) {
        return 0;
    }
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> map(
        h.data().data(), static_cast<Eigen::Index>(h.rows()), static_cast<Eigen::Index>(h.cols()));
    const Eigen::MatrixXd dense = map;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dense);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) {
        return 0;
    }
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > 1e-10 * sv(0)) {
            ++rank;
        }
    }
    return rank;
}

} // namespace mare
