#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mare/criteria.hpp"
#include "mare/error.hpp"
#include "mare/gth.hpp"
#include "mare/matrix.hpp"
#include "mare/problem.hpp"

namespace mare {

/// Iterate k of the decoupled doubling: the 2^k blocks U_j, V_j, W_j, Q_j,
/// kernels Y_k, Z_k, couplings S_k = V^T U, T_k = Q^T W, the kernel triplet
/// images v1^(k), v2^(k), and the right factor of H_k.
struct DaddaState {
    std::size_t k = 0;
    std::vector<Matrix> u_blocks;  // m x p each
    std::vector<Matrix> v_blocks;  // m x q
    std::vector<Matrix> w_blocks;  // n x q
    std::vector<Matrix> q_blocks;  // n x p
    Matrix y;                      // 2^k p x 2^k q
    Matrix z;                      // 2^k q x 2^k p
    Matrix s;                      // 2^k q x 2^k p
    Matrix t;                      // 2^k p x 2^k q
    Vector v1k;                    // 2^k p
    Vector v2k;                    // 2^k q
    // Per-block projections feeding the closed forms of v1^(k), v2^(k):
    // Q_i^T u1, Q_i^T D_alpha^{-1} v1, V_i^T u2, V_i^T A_beta^{-1} v2.
    Vector qu1;
    Vector qd1;
    Vector vu2;
    Vector vd2;
    /// gamma (I - Y_k Z_k)^{-1} Qcheck^T, so H_k = Ucheck * h_right.
    Matrix h_right;

    std::size_t blocks() const noexcept { return u_blocks.size(); }

    Matrix ucheck() const { return concat(u_blocks); }
    Matrix vcheck() const { return concat(v_blocks); }
    Matrix wcheck() const { return concat(w_blocks); }
    Matrix qcheck() const { return concat(q_blocks); }

    /// Dense H_k.
    Matrix h() const { return matmul(ucheck(), h_right); }

private:
    static Matrix concat(const std::vector<Matrix>& blocks)
    {
        if (blocks.empty()) {
            return {};
        }
        const std::size_t rows = blocks.front().rows();
        const std::size_t w = blocks.front().cols();
        Matrix out(rows, w * blocks.size());
        for (std::size_t j = 0; j < blocks.size(); ++j) {
            set_block(out, 0, j * w, blocks[j]);
        }
        return out;
    }
};

enum class StopKind {
    NormalizedResidual,
    RelativeChange,
    EntrywiseResidual,
    EntrywiseError,
    /// Run exactly max_iterations doublings without evaluating anything.
    FixedIterations,
};

struct StopCriteria {
    StopKind kind = StopKind::EntrywiseResidual;
    double tolerance = 1e-14;
    std::size_t max_iterations = 20;
    std::size_t kernel_row_cap = 4096;
    /// Required by EntrywiseError.
    std::optional<Matrix> x_true;
    /// Skip forming the dense final H (useful for FixedIterations timing).
    bool form_solution = true;
};

enum class Termination { Converged, MaxIterations, KernelCapExceeded };

inline const char* to_string(Termination t)
{
    switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::KernelCapExceeded: return "kernel_cap_exceeded";
    }
    return "unknown";
}

inline const char* to_string(StopKind k)
{
    switch (k) {
    case StopKind::NormalizedResidual: return "nres";
    case StopKind::RelativeChange: return "rchange";
    case StopKind::EntrywiseResidual: return "erres";
    case StopKind::EntrywiseError: return "ererr";
    case StopKind::FixedIterations: return "fixed";
    }
    return "unknown";
}

struct IterationRecord {
    std::size_t k = 0;
    double value = 0.0;  // NaN for FixedIterations
    std::size_t kernel_order = 0;
    double seconds = 0.0;  // cumulative since the solve started
};

struct SolveReport {
    std::vector<IterationRecord> records;
    Termination termination = Termination::MaxIterations;
    std::size_t iterations = 0;
    ShiftPair shifts;
    Matrix h;  // empty when form_solution is false
    std::optional<Matrix> g;
    /// Largest entrywise decrease H_k - H_{k+1} seen (0 when monotone);
    /// tracked only when H_k is formed every iteration.
    double max_decrease = 0.0;
    DaddaState final_state;
};

/// The decoupled alternating-directional doubling algorithm.
class DaddaSolver {
public:
    DaddaSolver(MareProblem prob, ShiftPair shifts)
        : prob_(std::move(prob)), shifts_(shifts)
    {
        require_valid(prob_);
        check_shifts(prob_, shifts_);
        auto [td, ta] = shifted_triplets(prob_, shifts_);
        d_alpha_.emplace(td);
        a_beta_.emplace(ta);
        d1_ = d_alpha_->solve(Matrix::column(prob_.v1));
        a2_ = a_beta_->solve(Matrix::column(prob_.v2));
        bru1_ = matvec_t(prob_.br, prob_.u1);
        cru2_ = matvec_t(prob_.cr, prob_.u2);
        for (double x : bru1_) {
            if (!(x > 0.0)) {
                throw RankDeficientError("Br^T u1 is not strictly positive");
            }
        }
        for (double x : cru2_) {
            if (!(x > 0.0)) {
                throw RankDeficientError("Cr^T u2 is not strictly positive");
            }
        }
    }

    explicit DaddaSolver(MareProblem prob) : DaddaSolver(prob, default_shifts(prob)) {}

    const MareProblem& problem() const noexcept { return prob_; }
    const ShiftPair& shifts() const noexcept { return shifts_; }

    DaddaState initialize() const
    {
        const double alpha = shifts_.alpha;
        const double beta = shifts_.beta;
        DaddaState st;
        st.u_blocks.push_back(a_beta_->solve(prob_.bl));
        st.v_blocks.push_back(a_beta_->solve_transposed(prob_.cr));
        st.w_blocks.push_back(d_alpha_->solve(prob_.cl));
        st.q_blocks.push_back(d_alpha_->solve_transposed(prob_.br));
        st.y = scaled(matmul_tn(st.q_blocks[0], prob_.cl), alpha);
        st.z = scaled(matmul_tn(prob_.cr, st.u_blocks[0]), beta);
        st.s = matmul_tn(st.v_blocks[0], st.u_blocks[0]);
        st.t = matmul_tn(st.q_blocks[0], st.w_blocks[0]);
        append_projections(st, 0);
        finish(st);
        return st;
    }

    /// State k -> k + 1.
    DaddaState advance(const DaddaState& prev) const
    {
        const double gamma = shifts_.gamma();
        DaddaState st;
        st.k = prev.k + 1;
        st.u_blocks = prev.u_blocks;
        st.v_blocks = prev.v_blocks;
        st.w_blocks = prev.w_blocks;
        st.q_blocks = prev.q_blocks;
        const std::size_t half = prev.blocks();
        for (std::size_t j = half; j < 2 * half; ++j) {
            st.u_blocks.push_back(
                shifted_apply(prob_.a, shifts_.alpha, a_beta_->solve(st.u_blocks[j - 1])));
            st.v_blocks.push_back(shifted_apply(
                prob_.a, shifts_.alpha, a_beta_->solve_transposed(st.v_blocks[j - 1]), true));
            st.w_blocks.push_back(
                shifted_apply(prob_.d, shifts_.beta, d_alpha_->solve(st.w_blocks[j - 1])));
            st.q_blocks.push_back(shifted_apply(
                prob_.d, shifts_.beta, d_alpha_->solve_transposed(st.q_blocks[j - 1]), true));
        }

        // Y_k = [0 Y; Y gamma T], Z_k = [0 Z; Z gamma S].
        const std::size_t yr = prev.y.rows();
        const std::size_t yc = prev.y.cols();
        st.y = Matrix(2 * yr, 2 * yc);
        set_block(st.y, 0, yc, prev.y);
        set_block(st.y, yr, 0, prev.y);
        set_block(st.y, yr, yc, scaled(prev.t, gamma));
        st.z = Matrix(2 * yc, 2 * yr);
        set_block(st.z, 0, yr, prev.z);
        set_block(st.z, yc, 0, prev.z);
        set_block(st.z, yc, yr, scaled(prev.s, gamma));

        st.s = grow_coupling(prev.s, st.v_blocks, st.u_blocks, half);
        st.t = grow_coupling(prev.t, st.q_blocks, st.w_blocks, half);

        st.qu1 = prev.qu1;
        st.qd1 = prev.qd1;
        st.vu2 = prev.vu2;
        st.vd2 = prev.vd2;
        append_projections(st, half);
        finish(st);
        return st;
    }

    /// (offdiag(Y_k Z_k), 1 (x) Br^T u1, v1^(k) + Y_k v2^(k)).
    TripletRepresentation kernel_triplet(const DaddaState& st) const
    {
        return make_kernel(st.y, st.z, bru1_, st.v1k, st.v2k);
    }

    /// (offdiag(Z_k Y_k), 1 (x) Cr^T u2, v2^(k) + Z_k v1^(k)).
    TripletRepresentation dual_kernel_triplet(const DaddaState& st) const
    {
        return make_kernel(st.z, st.y, cru2_, st.v2k, st.v1k);
    }

    /// G_k = gamma Wcheck (I - Z_k Y_k)^{-1} Vcheck^T, the dual iterate.
    Matrix dual_solution(const DaddaState& st) const
    {
        const Matrix w = st.wcheck();
        if (w.cols() == 0) {
            return Matrix(prob_.n(), prob_.m());
        }
        const GthFactorization f = gth_factorize(dual_kernel_triplet(st));
        const Matrix right = scaled(f.solve(st.vcheck().transpose()), shifts_.gamma());
        return matmul(w, right);
    }

    SolveReport solve(const StopCriteria& crit) const
    {
        detail::require(crit.kind == StopKind::FixedIterations ||
                            (crit.tolerance > 0.0 && crit.tolerance < 1.0),
                        "stop criteria: tolerance must lie in (0, 1)");
        detail::require(crit.kernel_row_cap >= prob_.p() + prob_.q(),
                        "stop criteria: kernel_row_cap below p + q");
        detail::require(crit.kind != StopKind::EntrywiseError || crit.x_true.has_value(),
                        "stop criteria: entrywise error needs X_true");
        using Clock = std::chrono::steady_clock;
        const auto start = Clock::now();
        SolveReport rep;
        rep.shifts = shifts_;
        const bool dense_each = crit.kind != StopKind::FixedIterations;
        const std::size_t width = std::max<std::size_t>({prob_.p(), prob_.q(), 1});
        DaddaState st = initialize();
        Matrix h_prev;
        while (true) {
            IterationRecord rec;
            rec.k = st.k;
            rec.kernel_order = st.y.rows();
            bool converged = false;
            if (dense_each) {
                Matrix h = st.h();
                rec.value = evaluate(crit, h, h_prev);
                converged = rec.value <= crit.tolerance;
                if (!h_prev.empty()) {
                    for (std::size_t i = 0; i < h.size(); ++i) {
                        rep.max_decrease =
                            std::max(rep.max_decrease, h_prev.data()[i] - h.data()[i]);
                    }
                }
                h_prev = std::move(h);
            } else {
                rec.value = std::numeric_limits<double>::quiet_NaN();
            }
            rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
            rep.records.push_back(rec);
            if (converged) {
                rep.termination = Termination::Converged;
                break;
            }
            if (st.k >= crit.max_iterations) {
                rep.termination = Termination::MaxIterations;
                break;
            }
            if ((std::size_t{2} << st.k) * width > crit.kernel_row_cap) {
                rep.termination = Termination::KernelCapExceeded;
                break;
            }
            st = advance(st);
        }
        rep.iterations = st.k;
        if (crit.form_solution) {
            rep.h = dense_each ? std::move(h_prev) : st.h();
        }
        rep.final_state = std::move(st);
        return rep;
    }

    SolveReport solve() const { return solve(StopCriteria{}); }

private:
    double evaluate(const StopCriteria& crit, const Matrix& h, const Matrix& h_prev) const
    {
        switch (crit.kind) {
        case StopKind::NormalizedResidual: return normalized_residual(prob_, h);
        case StopKind::RelativeChange:
            return h_prev.empty() ? std::numeric_limits<double>::infinity()
                                  : relative_change_value(h_prev, h);
        case StopKind::EntrywiseResidual: return erres(prob_, h);
        case StopKind::EntrywiseError: return ererr(h, *crit.x_true);
        case StopKind::FixedIterations: break;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    /// [old, lhs_old^T rhs_new; lhs_new^T rhs_old, lhs_new^T rhs_new] where
    /// the coupling is lhs-check^T rhs-check and `half` blocks are old.
    static Matrix grow_coupling(const Matrix& old, const std::vector<Matrix>& lhs,
                                const std::vector<Matrix>& rhs, std::size_t half)
    {
        const std::size_t lw = lhs.front().cols();
        const std::size_t rw = rhs.front().cols();
        const std::size_t nb = lhs.size();
        Matrix out(nb * lw, nb * rw);
        set_block(out, 0, 0, old);
        for (std::size_t i = 0; i < nb; ++i) {
            for (std::size_t j = (i < half ? half : 0); j < nb; ++j) {
                set_block(out, i * lw, j * rw, matmul_tn(lhs[i], rhs[j]));
            }
        }
        return out;
    }

    /// Extends qu1/qd1/vu2/vd2 with blocks [from, blocks()).
    void append_projections(DaddaState& st, std::size_t from) const
    {
        const Vector d1 = d1_.col(0);
        const Vector a2 = a2_.col(0);
        for (std::size_t j = from; j < st.blocks(); ++j) {
            for (double x : matvec_t(st.q_blocks[j], prob_.u1)) st.qu1.push_back(x);
            for (double x : matvec_t(st.q_blocks[j], d1)) st.qd1.push_back(x);
            for (double x : matvec_t(st.v_blocks[j], prob_.u2)) st.vu2.push_back(x);
            for (double x : matvec_t(st.v_blocks[j], a2)) st.vd2.push_back(x);
        }
    }

    /// Block i of the image: scale * base0 + direct_i + gamma * sum_{l<i} acc_l.
    static Vector closed_form(std::size_t nb, std::size_t w, double scale, const Vector& base0,
                              const Vector& direct, const Vector& acc, double gamma)
    {
        Vector out(nb * w);
        Vector prefix(w, 0.0);
        for (std::size_t i = 0; i < nb; ++i) {
            for (std::size_t c = 0; c < w; ++c) {
                out[i * w + c] = scale * base0[c] + direct[i * w + c] + gamma * prefix[c];
            }
            for (std::size_t c = 0; c < w; ++c) {
                prefix[c] += acc[i * w + c];
            }
        }
        return out;
    }

    /// Fills v1k, v2k and the kernel solve for H_k.
    void finish(DaddaState& st) const
    {
        const std::size_t nb = st.blocks();
        const double gamma = shifts_.gamma();
        const Vector q0v1 = matvec_t(st.q_blocks[0], prob_.v1);
        const Vector v0v2 = matvec_t(st.v_blocks[0], prob_.v2);
        st.v1k = closed_form(nb, prob_.p(), shifts_.alpha, q0v1, st.qu1, st.qd1, gamma);
        st.v2k = closed_form(nb, prob_.q(), shifts_.beta, v0v2, st.vu2, st.vd2, gamma);
        const GthFactorization f = gth_factorize(kernel_triplet(st));
        st.h_right = scaled(f.solve(st.qcheck().transpose()), gamma);
        if (st.h_right.empty()) {
            st.h_right = Matrix(0, prob_.n());
        }
    }

    static TripletRepresentation make_kernel(const Matrix& lhs, const Matrix& rhs,
                                             const Vector& base_u, const Vector& va,
                                             const Vector& vb)
    {
        const std::size_t order = lhs.rows();
        const std::size_t w = base_u.size();
        TripletRepresentation t;
        t.offdiag = off_diagonal(matmul(lhs, rhs));
        t.u.resize(order);
        for (std::size_t i = 0; i < order; ++i) {
            t.u[i] = base_u[i % w];
        }
        const Vector lv = matvec(lhs, vb);
        t.v.resize(order);
        for (std::size_t i = 0; i < order; ++i) {
            t.v[i] = va[i] + lv[i];
        }
        return t;
    }

    MareProblem prob_;
    ShiftPair shifts_;
    std::optional<ShiftedSolver> d_alpha_;
    std::optional<ShiftedSolver> a_beta_;
    Matrix d1_;  // D_alpha^{-1} v1
    Matrix a2_;  // A_beta^{-1} v2
    Vector bru1_;
    Vector cru2_;
};

/// One-call convenience wrapper.
inline SolveReport solve(const MareProblem& prob, const ShiftPair& shifts, const StopCriteria& crit)
{
    return DaddaSolver(prob, shifts).solve(crit);
}

} // namespace mare
