#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "mare/error.hpp"
#include "mare/matrix.hpp"
#include "mare/problem.hpp"

namespace mare {

/// Dense doubling iterates (E_k, F_k, G_k, H_k) in ordinary arithmetic.
/// Used to cross-check values, not componentwise accuracy.
struct AddaState {
    Eigen::MatrixXd e;  // n x n
    Eigen::MatrixXd f;  // m x m
    Eigen::MatrixXd g;  // n x m
    Eigen::MatrixXd h;  // m x n
    std::size_t k = 0;
};

inline constexpr std::size_t kOracleSizeCap = 200;

namespace detail {

inline Eigen::MatrixXd to_eigen(const Matrix& m)
{
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
        }
    }
    return out;
}

inline Matrix from_eigen(const Eigen::MatrixXd& m)
{
    Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
        }
    }
    return out;
}

} // namespace detail

/// [E0 G0; H0 F0] = [D_a -bC; -aB A_b]^{-1} [D_{-b} aC; bB A_{-a}].
inline AddaState oracle_init(const MareProblem& prob, const ShiftPair& s)
{
    const auto m = static_cast<Eigen::Index>(prob.m());
    const auto n = static_cast<Eigen::Index>(prob.n());
    if (prob.m() + prob.n() > kOracleSizeCap) {
        throw InvalidArgument("adda oracle: m + n exceeds " + std::to_string(kOracleSizeCap));
    }
    const Eigen::MatrixXd a = detail::to_eigen(prob.a.to_dense());
    const Eigen::MatrixXd d = detail::to_eigen(prob.d.to_dense());
    const Eigen::MatrixXd b =
        detail::to_eigen(prob.bl) * detail::to_eigen(prob.br).transpose();
    const Eigen::MatrixXd c =
        detail::to_eigen(prob.cl) * detail::to_eigen(prob.cr).transpose();
    const Eigen::MatrixXd im = Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd in = Eigen::MatrixXd::Identity(n, n);

    Eigen::MatrixXd lhs(n + m, n + m);
    lhs << s.alpha * d + in, -s.beta * c, -s.alpha * b, s.beta * a + im;
    Eigen::MatrixXd rhs(n + m, n + m);
    rhs << in - s.beta * d, s.alpha * c, s.beta * b, im - s.alpha * a;
    const Eigen::MatrixXd x = lhs.partialPivLu().solve(rhs);

    AddaState st;
    st.e = x.topLeftCorner(n, n);
    st.g = x.topRightCorner(n, m);
    st.h = x.bottomLeftCorner(m, n);
    st.f = x.bottomRightCorner(m, m);
    return st;
}

inline AddaState oracle_step(const AddaState& st)
{
    const auto m = st.f.rows();
    const auto n = st.e.rows();
    const Eigen::MatrixXd khg = Eigen::MatrixXd::Identity(m, m) - st.h * st.g;
    const Eigen::MatrixXd kgh = Eigen::MatrixXd::Identity(n, n) - st.g * st.h;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu_hg(khg);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu_gh(kgh);
    if (!std::isfinite(lu_hg.rcond()) || lu_hg.rcond() < 1e-300 || !std::isfinite(lu_gh.rcond()) ||
        lu_gh.rcond() < 1e-300) {
        throw NotMMatrixError("adda oracle: singular kernel");
    }
    AddaState next;
    next.k = st.k + 1;
    const Eigen::MatrixXd f_inv_hg = st.f * lu_hg.inverse();
    const Eigen::MatrixXd e_inv_gh = st.e * lu_gh.inverse();
    next.f = f_inv_hg * st.f;
    next.e = e_inv_gh * st.e;
    next.h = st.h + f_inv_hg * st.h * st.e;
    next.g = st.g + e_inv_gh * st.g * st.f;
    return next;
}

inline Matrix oracle_h(const AddaState& st) { return detail::from_eigen(st.h); }
inline Matrix oracle_g(const AddaState& st) { return detail::from_eigen(st.g); }

} // namespace mare
