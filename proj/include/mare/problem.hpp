#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mare/error.hpp"
#include "mare/gth.hpp"
#include "mare/matrix.hpp"
#include "mare/structured.hpp"

namespace mare {

/// X C X - X D - A X + B = 0 with B = Bl Br^T, C = Cl Cr^T, and the triplet
/// W [u1; u2] = [v1; v2] of W = [D -C; -B A].
struct MareProblem {
    StructuredSquare a;  // m x m
    StructuredSquare d;  // n x n
    Matrix bl;           // m x p
    Matrix br;           // n x p
    Matrix cl;           // n x q
    Matrix cr;           // m x q
    Vector u1;           // n
    Vector u2;           // m
    Vector v1;           // n
    Vector v2;           // m

    std::size_t m() const noexcept { return a.order(); }
    std::size_t n() const noexcept { return d.order(); }
    std::size_t p() const noexcept { return bl.cols(); }
    std::size_t q() const noexcept { return cl.cols(); }
};

struct ShiftPair {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma() const noexcept { return alpha + beta; }
};

struct Diagnostics {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    bool singular = false;

    bool valid() const noexcept { return violations.empty(); }
};

/// Numerical full column rank: pivoted QR, columns whose pivot falls below
/// 1e-12 times the largest column norm count as dependent.
inline bool has_full_column_rank(const Matrix& f)
{
    if (f.cols() == 0) {
        return true;
    }
    if (f.rows() < f.cols()) {
        return false;
    }
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> map(
        f.data().data(), static_cast<Eigen::Index>(f.rows()), static_cast<Eigen::Index>(f.cols()));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(map);
    qr.setThreshold(1e-12);
    return qr.rank() == static_cast<Eigen::Index>(f.cols());
}

namespace detail {

inline void check_z_pattern(const StructuredSquare& s, const char* name, Diagnostics& out)
{
    const std::size_t n = s.order();
    const Vector diag = s.diagonal_entries();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(diag[i] > 0.0)) {
            out.violations.push_back(std::string(name) + ": diagonal entry " + std::to_string(i) +
                                     " is not positive");
            break;
        }
    }
    if (const auto* lr = s.as_low_rank()) {
        if (lr->sign < 0 && all_nonnegative(lr->left) && all_nonnegative(lr->right)) {
            return;
        }
    }
    auto breach = [&](std::size_t i, std::size_t j) {
        out.violations.push_back(std::string(name) + ": off-diagonal entry (" + std::to_string(i) +
                                 "," + std::to_string(j) + ") is positive");
    };
    if (const auto* b = s.as_banded()) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j0 = i >= b->lower ? i - b->lower : 0;
            for (std::size_t j = j0; j < std::min(n, i + b->upper + 1); ++j) {
                if (j != i && s.at(i, j) > 0.0) {
                    return breach(i, j);
                }
            }
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && s.at(i, j) > 0.0) {
                return breach(i, j);
            }
        }
    }
}

inline bool all_finite_vec(const Vector& v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline bool structured_finite(const StructuredSquare& s)
{
    if (const auto* d = s.as_dense()) {
        return all_finite(d->entries);
    }
    if (const auto* b = s.as_banded()) {
        return all_finite_vec(b->band);
    }
    const auto& lr = *s.as_low_rank();
    return all_finite_vec(lr.diag) && all_finite(lr.left) && all_finite(lr.right);
}

} // namespace detail

/// Necessary-condition checks; never throws for numerically bad input.
inline Diagnostics validate(const MareProblem& prob)
{
    Diagnostics out;
    const std::size_t m = prob.m();
    const std::size_t n = prob.n();
    const std::size_t p = prob.p();
    const std::size_t q = prob.q();
    if (m == 0 || n == 0) {
        out.violations.push_back("dimensions: m and n must be positive");
        return out;
    }
    if (prob.bl.rows() != m || prob.br.rows() != n || prob.br.cols() != p || prob.cl.rows() != n ||
        prob.cr.rows() != m || prob.cr.cols() != q || prob.u1.size() != n || prob.u2.size() != m ||
        prob.v1.size() != n || prob.v2.size() != m) {
        out.violations.push_back("dimensions: factor or vector shapes disagree with m, n, p, q");
        return out;
    }
    for (const auto* f : {&prob.bl, &prob.br, &prob.cl, &prob.cr}) {
        if (!all_finite(*f)) {
            out.violations.push_back("factors: non-finite entry");
            return out;
        }
    }
    for (const auto* v : {&prob.u1, &prob.u2, &prob.v1, &prob.v2}) {
        if (!detail::all_finite_vec(*v)) {
            out.violations.push_back("triplet: non-finite entry");
            return out;
        }
    }
    if (!detail::structured_finite(prob.a) || !detail::structured_finite(prob.d)) {
        out.violations.push_back("A/D: non-finite entry");
        return out;
    }
    detail::check_z_pattern(prob.a, "A", out);
    detail::check_z_pattern(prob.d, "D", out);
    const char* names[] = {"Bl", "Br", "Cl", "Cr"};
    const Matrix* factors[] = {&prob.bl, &prob.br, &prob.cl, &prob.cr};
    for (int i = 0; i < 4; ++i) {
        if (!all_nonnegative(*factors[i])) {
            out.violations.push_back(std::string(names[i]) + ": negative entry");
        } else if (!has_full_column_rank(*factors[i])) {
            out.violations.push_back(std::string(names[i]) + ": not of full column rank");
        }
    }
    if (!all_positive(prob.u1) || !all_positive(prob.u2)) {
        out.violations.push_back("triplet: u1 and u2 must be strictly positive");
    }
    if (!all_nonnegative(prob.v1) || !all_nonnegative(prob.v2)) {
        out.violations.push_back("triplet: v1 and v2 must be nonnegative");
    }
    if (out.valid()) {
        try {
            // D u1 - C u2 = v1 and A u2 - B u1 = v2.
            const Matrix du = apply_structured(prob.d, Matrix::column(prob.u1));
            const Matrix cu = matmul(prob.cl, matmul_tn(prob.cr, Matrix::column(prob.u2)));
            const Matrix au = apply_structured(prob.a, Matrix::column(prob.u2));
            const Matrix bu = matmul(prob.bl, matmul_tn(prob.br, Matrix::column(prob.u1)));
            const Vector dd = prob.d.diagonal_entries();
            const Vector ad = prob.a.diagonal_entries();
            double res = 0.0;
            double scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                res = std::max(res, std::abs(du(i, 0) - cu(i, 0) - prob.v1[i]));
                scale = std::max({scale, dd[i] * prob.u1[i], prob.v1[i]});
            }
            for (std::size_t i = 0; i < m; ++i) {
                res = std::max(res, std::abs(au(i, 0) - bu(i, 0) - prob.v2[i]));
                scale = std::max({scale, ad[i] * prob.u2[i], prob.v2[i]});
            }
            if (res > 1e-12 * scale) {
                out.violations.push_back("triplet: W [u1; u2] differs from [v1; v2] (relative residual " +
                                         std::to_string(res / scale) + ")");
            }
        } catch (const MareError& e) {
            out.violations.push_back(std::string("triplet: ") + e.what());
        }
    }
    const bool v_zero = std::all_of(prob.v1.begin(), prob.v1.end(), [](double x) { return x == 0.0; }) &&
                        std::all_of(prob.v2.begin(), prob.v2.end(), [](double x) { return x == 0.0; });
    if (v_zero) {
        out.singular = true;
        out.warnings.push_back(
            "singular, irreducibility unchecked: v1 = v2 = 0, possibly critical; expect linear "
            "convergence");
    }
    return out;
}

/// Throws InvalidArgument listing every violation.
inline void require_valid(const MareProblem& prob)
{
    const Diagnostics diag = validate(prob);
    if (!diag.valid()) {
        std::string msg = "invalid problem:";
        for (const auto& v : diag.violations) {
            msg += "\n  " + v;
        }
        throw InvalidArgument(msg);
    }
}

/// alpha = 1 / max_i a_ii, beta = 1 / max_j d_jj over the true diagonals.
inline ShiftPair default_shifts(const MareProblem& prob)
{
    const Vector ad = prob.a.diagonal_entries();
    const Vector dd = prob.d.diagonal_entries();
    detail::require(!ad.empty() && !dd.empty(), "default_shifts: empty problem");
    return {1.0 / *std::max_element(ad.begin(), ad.end()),
            1.0 / *std::max_element(dd.begin(), dd.end())};
}

/// Throws InvalidArgument unless 0 <= alpha <= 1/max a_ii, 0 <= beta <=
/// 1/max d_jj and gamma > 0.
inline void check_shifts(const MareProblem& prob, const ShiftPair& s)
{
    const ShiftPair top = default_shifts(prob);
    detail::require(std::isfinite(s.alpha) && std::isfinite(s.beta), "shifts: must be finite");
    detail::require(s.alpha >= 0.0 && s.alpha <= top.alpha, "shifts: alpha outside [0, 1/max a_ii]");
    detail::require(s.beta >= 0.0 && s.beta <= top.beta, "shifts: beta outside [0, 1/max d_jj]");
    detail::require(s.gamma() > 0.0, "shifts: alpha + beta must be positive");
}

/// s * S + I kept in the structure of S.
inline StructuredSquare shift_structured(const StructuredSquare& s, double scale)
{
    if (const auto* dn = s.as_dense()) {
        Matrix m = scaled(dn->entries, scale);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            m(i, i) += 1.0;
        }
        return StructuredSquare::dense(std::move(m));
    }
    if (const auto* b = s.as_banded()) {
        std::vector<double> band = b->band;
        for (double& x : band) {
            x *= scale;
        }
        const std::size_t n = s.order();
        for (std::size_t i = 0; i < n; ++i) {
            band[b->lower * n + i] += 1.0;
        }
        return StructuredSquare::banded(n, b->lower, b->upper, std::move(band));
    }
    const auto& lr = *s.as_low_rank();
    Vector diag = lr.diag;
    for (double& x : diag) {
        x = scale * x + 1.0;
    }
    return StructuredSquare::diag_plus_low_rank(std::move(diag), scaled(lr.left, scale), lr.right,
                                                lr.sign);
}

/// Structured matrix with its triplet vectors.
struct ShiftedTriplet {
    StructuredSquare matrix;
    Vector u;
    Vector v;

    TripletRepresentation to_dense() const
    {
        Matrix n = scaled(matrix.to_dense(), -1.0);
        for (std::size_t i = 0; i < n.rows(); ++i) {
            n(i, i) = 0.0;
        }
        return {std::move(n), u, v};
    }
};

/// (N_{D_alpha}, u1, alpha v1 + u1 + alpha C u2) and
/// (N_{A_beta}, u2, beta v2 + u2 + beta B u1).
inline std::pair<ShiftedTriplet, ShiftedTriplet> shifted_triplets(const MareProblem& prob,
                                                                  const ShiftPair& s)
{
    const Vector cu = matvec(prob.cl, matvec_t(prob.cr, prob.u2));
    const Vector bu = matvec(prob.bl, matvec_t(prob.br, prob.u1));
    Vector img_d(prob.n());
    for (std::size_t i = 0; i < prob.n(); ++i) {
        img_d[i] = s.alpha * prob.v1[i] + prob.u1[i] + s.alpha * cu[i];
    }
    Vector img_a(prob.m());
    for (std::size_t i = 0; i < prob.m(); ++i) {
        img_a[i] = s.beta * prob.v2[i] + prob.u2[i] + s.beta * bu[i];
    }
    return {ShiftedTriplet{shift_structured(prob.d, s.alpha), prob.u1, std::move(img_d)},
            ShiftedTriplet{shift_structured(prob.a, s.beta), prob.u2, std::move(img_a)}};
}

/// (I - s S) x, or its transpose, as diag(max(0, 1 - s S_ii)) x + s N_S x;
/// nonnegative whenever x is and s is admissible.
inline Matrix shifted_apply(const StructuredSquare& mat, double s, const Matrix& x,
                            bool transpose = false)
{
    detail::require_dims(mat.order() == x.rows(), "shifted_apply: dimension mismatch");
    const Vector diag = mat.diagonal_entries();
    Matrix y = s == 0.0 ? Matrix(x.rows(), x.cols()) : apply_offdiag_negated(mat, x, transpose);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double coef = std::max(0.0, 1.0 - s * diag[i]);
        for (std::size_t j = 0; j < x.cols(); ++j) {
            y(i, j) = coef * x(i, j) + s * y(i, j);
        }
    }
    require_finite(y, "shifted_apply");
    return y;
}

/// Solves with a shifted M-matrix through the cheapest cancellation-free
/// route its structure allows.
class ShiftedSolver {
public:
    explicit ShiftedSolver(const ShiftedTriplet& t)
    {
        const StructuredSquare& s = t.matrix;
        if (const auto* lr = s.as_low_rank();
            lr && lr->sign < 0 && all_nonnegative(lr->left) && all_nonnegative(lr->right)) {
            impl_.emplace<SmwSolver>(lr->diag, lr->left, lr->right, t.u, t.v);
        } else if (const auto* b = s.as_banded()) {
            std::vector<double> nband(b->band.size());
            for (std::size_t k = 0; k < nband.size(); ++k) {
                nband[k] = b->band[k] == 0.0 ? 0.0 : -b->band[k];
            }
            std::fill_n(nband.begin() + static_cast<std::ptrdiff_t>(b->lower * s.order()),
                        s.order(), 0.0);
            impl_.emplace<BandedGthFactorization>(
                gth_factorize_banded(s.order(), b->lower, b->upper, nband, t.u, t.v));
        } else {
            impl_.emplace<GthFactorization>(gth_factorize(t.to_dense()));
        }
    }

    Matrix solve(const Matrix& b) const
    {
        return std::visit([&](const auto& f) { return f.solve(b); }, impl_);
    }
    Matrix solve_transposed(const Matrix& b) const
    {
        return std::visit([&](const auto& f) { return f.solve_transposed(b); }, impl_);
    }

    const char* route() const noexcept
    {
        switch (impl_.index()) {
        case 0: return "dense-gth";
        case 1: return "banded-gth";
        default: return "smw";
        }
    }

private:
    std::variant<GthFactorization, BandedGthFactorization, SmwSolver> impl_{
        std::in_place_index<0>, GthFactorization(detail::DenseLuStore(Matrix()))};
};

} // namespace mare
