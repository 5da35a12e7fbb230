#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "mare/error.hpp"
#include "mare/matrix.hpp"
#include "mare/problem.hpp"
#include "mare/rng.hpp"
#include "mare/structured.hpp"

namespace mare {

struct FluidFlowSpec {
    std::size_t m = 2;
    std::size_t n = 18;
};

/// A = n I_m, D = (1e4 n + m) I_n - 1e4 1 1^T, B = 1_m 1_n^T, C = 1_n 1_m^T,
/// u = 1, v = 0. Returns the problem and its minimal solution (1/max(m,n)) 1.
inline std::pair<MareProblem, Matrix> gen_fluid(const FluidFlowSpec& spec)
{
    const std::size_t m = spec.m;
    const std::size_t n = spec.n;
    detail::require(m >= 1 && n >= 1, "gen_fluid: m and n must be at least 1");
    const double dn = static_cast<double>(n);
    const double dm = static_cast<double>(m);
    MareProblem p;
    p.a = StructuredSquare::diagonal(Vector(m, dn));
    p.d = StructuredSquare::diag_plus_low_rank(Vector(n, 1e4 * dn + dm), Matrix(n, 1, 1e4),
                                               Matrix::ones(n, 1), -1);
    p.bl = Matrix::ones(m, 1);
    p.br = Matrix::ones(n, 1);
    p.cl = Matrix::ones(n, 1);
    p.cr = Matrix::ones(m, 1);
    p.u1 = Vector(n, 1.0);
    p.u2 = Vector(m, 1.0);
    p.v1 = Vector(n, 0.0);
    p.v2 = Vector(m, 0.0);
    return {std::move(p), Matrix(m, n, 1.0 / std::max(dm, dn))};
}

namespace detail {

inline double ascending_sum(const Vector& x)
{
    double s = 0.0;
    for (double v : x) {
        s += v;
    }
    return s;
}

/// Scales x > 0 to unit sum, then pushes the rounding defect into the
/// largest entry until the ascending-order sum is exactly 1.
inline void normalize_to_unit_sum(Vector& x)
{
    const double total = ascending_sum(x);
    for (double& v : x) {
        v /= total;
    }
    const auto big = std::max_element(x.begin(), x.end()) - x.begin();
    for (int pass = 0; pass < 16; ++pass) {
        const double s = ascending_sum(x);
        if (s == 1.0) {
            return;
        }
        x[static_cast<std::size_t>(big)] += 1.0 - s;
    }
}

} // namespace detail

/// Gauss-Legendre rule mapped to (0, 1): nodes ascending, weights summing to 1.
inline std::pair<Vector, Vector> gauss_legendre(std::size_t n)
{
    detail::require(n >= 1, "gauss_legendre: n must be at least 1");
    Vector nodes(n);
    Vector weights(n);
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
        double deriv = 0.0;
        bool done = false;
        for (int it = 0; it < 100 && !done; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double dk = static_cast<double>(k);
                const double p2 = ((2.0 * dk - 1.0) * x * p1 - (dk - 1.0) * p0) / dk;
                p0 = p1;
                p1 = p2;
            }
            deriv = dn * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / deriv;
            x -= step;
            done = std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x));
        }
        if (!done) {
            throw MareError("gauss_legendre: Newton iteration did not converge");
        }
        const double w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        // x is the i-th largest root; its mirror is -x.
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[n - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    detail::normalize_to_unit_sum(weights);
    return {std::move(nodes), std::move(weights)};
}

enum class TransportNodes { Random, GaussLegendre };

struct TransportSpec {
    std::size_t n = 10;
    std::uint64_t seed = 0;
    /// Physical parameters in (0, 1); drawn from the seed when absent.
    std::optional<double> alpha_t;
    std::optional<double> beta_t;
    TransportNodes nodes = TransportNodes::Random;
};

/// Drawn parameters alongside the problem, for reporting.
struct TransportInstance {
    MareProblem problem;
    double alpha_t = 0.0;
    double beta_t = 0.0;
    Vector omega;
    Vector c;
};

/// Transport-theory MARE. Draw order from the seeded stream: alpha_t,
/// beta_t (always drawn, then overridden if fixed), omega (n uniforms,
/// sorted decreasing), c (n absolute normals, normalized), v1, v2 (n
/// uniforms each). With Gauss-Legendre nodes, omega and c come from the
/// rule and are not drawn.
inline TransportInstance gen_transport_instance(const TransportSpec& spec)
{
    const std::size_t n = spec.n;
    detail::require(n >= 1, "gen_transport: n must be at least 1");
    SplitMix64 rng(spec.seed);
    TransportInstance inst;
    inst.alpha_t = rng.uniform();
    inst.beta_t = rng.uniform();
    if (spec.alpha_t) {
        inst.alpha_t = *spec.alpha_t;
    }
    if (spec.beta_t) {
        inst.beta_t = *spec.beta_t;
    }
    detail::require(inst.alpha_t > 0.0 && inst.alpha_t < 1.0, "gen_transport: alpha_t outside (0,1)");
    detail::require(inst.beta_t > 0.0 && inst.beta_t < 1.0, "gen_transport: beta_t outside (0,1)");

    if (spec.nodes == TransportNodes::GaussLegendre) {
        auto [x, w] = gauss_legendre(n);
        inst.omega.assign(x.rbegin(), x.rend());
        inst.c.assign(w.rbegin(), w.rend());
    } else {
        inst.omega.resize(n);
        for (double& w : inst.omega) {
            w = rng.uniform();
        }
        std::sort(inst.omega.begin(), inst.omega.end(), std::greater<>());
        inst.c.resize(n);
        for (double& x : inst.c) {
            do {
                x = std::abs(rng.normal());
            } while (x == 0.0);
        }
        detail::normalize_to_unit_sum(inst.c);
    }

    Vector q(n);
    Vector da(n);
    Vector dd(n);
    const double sa = 1.0 / (inst.beta_t * (1.0 + inst.alpha_t));
    const double sd = 1.0 / (inst.beta_t * (1.0 - inst.alpha_t));
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = 0.5 * inst.c[i] / inst.omega[i];
        da[i] = sa / inst.omega[i];
        dd[i] = sd / inst.omega[i];
    }
    const Matrix qcol = Matrix::column(q);
    const Matrix ones = Matrix::ones(n, 1);

    MareProblem& p = inst.problem;
    p.a = StructuredSquare::diag_plus_low_rank(da, ones, qcol, -1);
    p.d = StructuredSquare::diag_plus_low_rank(dd, qcol, ones, -1);
    p.bl = ones;
    p.br = ones;
    p.cl = qcol;
    p.cr = qcol;

    // W = diag(dd, da) - [q; 1][1; q]^T, so with a = [q; 1], b = [1; q]:
    // W^{-1} v = Delta^{-1} v + Delta^{-1} a (b^T Delta^{-1} v) / (1 - b^T Delta^{-1} a).
    for (int attempt = 0; attempt < 8; ++attempt) {
        Vector v1(n);
        Vector v2(n);
        for (double& x : v1) {
            x = rng.uniform();
        }
        for (double& x : v2) {
            x = rng.uniform();
        }
        double btdv = 0.0;
        double btda = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            btdv += v1[i] / dd[i];
            btda += q[i] / dd[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            btdv += q[i] * v2[i] / da[i];
            btda += q[i] / da[i];
        }
        const double denom = 1.0 - btda;
        if (!(denom > 0.0)) {
            continue;
        }
        const double coef = btdv / denom;
        Vector u1(n);
        Vector u2(n);
        for (std::size_t i = 0; i < n; ++i) {
            u1[i] = v1[i] / dd[i] + q[i] / dd[i] * coef;
            u2[i] = v2[i] / da[i] + 1.0 / da[i] * coef;
        }
        if (!all_positive(u1) || !all_positive(u2)) {
            continue;
        }
        p.u1 = std::move(u1);
        p.u2 = std::move(u2);
        p.v1 = std::move(v1);
        p.v2 = std::move(v2);
        return inst;
    }
    throw MareError("gen_transport: could not draw a positive triplet vector");
}

inline MareProblem gen_transport(const TransportSpec& spec)
{
    return gen_transport_instance(spec).problem;
}

struct RandomSpec {
    std::size_t m = 8;
    std::size_t n = 8;
    std::size_t p = 1;
    std::size_t q = 1;
    std::uint64_t seed = 0;
    /// Scale of v relative to the off-diagonal mass; small values push W
    /// toward singularity.
    double v_scale = 1.0;
};

namespace detail {

/// Random Z-matrix structure with a placeholder diagonal; the real diagonal
/// is installed later by with_true_diagonal.
inline StructuredSquare random_z_matrix(std::size_t order, SplitMix64& rng)
{
    const auto kind = rng.next() % 3;
    if (kind == 0) {
        Matrix m(order, order);
        for (std::size_t i = 0; i < order; ++i) {
            for (std::size_t j = 0; j < order; ++j) {
                if (i != j && rng.uniform() < 0.5) {
                    m(i, j) = -rng.uniform();
                }
            }
        }
        return StructuredSquare::dense(std::move(m));
    }
    if (kind == 1) {
        const std::size_t lo = std::min<std::size_t>(order - 1, 1 + rng.next() % 2);
        const std::size_t hi = std::min<std::size_t>(order - 1, 1 + rng.next() % 2);
        std::vector<double> band((lo + hi + 1) * order, 0.0);
        for (std::size_t slot = 0; slot < lo + hi + 1; ++slot) {
            const long d = static_cast<long>(slot) - static_cast<long>(lo);
            for (std::size_t i = 0; i < order; ++i) {
                const long j = static_cast<long>(i) + d;
                if (d != 0 && j >= 0 && j < static_cast<long>(order)) {
                    band[slot * order + i] = -rng.uniform();
                }
            }
        }
        return StructuredSquare::banded(order, lo, hi, std::move(band));
    }
    const std::size_t r = std::min<std::size_t>(order, 1 + rng.next() % 2);
    Matrix left(order, r);
    Matrix right(order, r);
    for (double& x : left.data()) {
        x = rng.uniform();
    }
    for (double& x : right.data()) {
        x = rng.uniform();
    }
    return StructuredSquare::diag_plus_low_rank(Vector(order, 1.0), std::move(left),
                                                std::move(right), -1);
}

/// Replaces the true diagonal of `s` with `diag`.
inline StructuredSquare with_true_diagonal(const StructuredSquare& s, const Vector& diag)
{
    const std::size_t n = s.order();
    if (const auto* d = s.as_dense()) {
        Matrix m = d->entries;
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = diag[i];
        }
        return StructuredSquare::dense(std::move(m));
    }
    if (const auto* b = s.as_banded()) {
        std::vector<double> band = b->band;
        for (std::size_t i = 0; i < n; ++i) {
            band[b->lower * n + i] = diag[i];
        }
        return StructuredSquare::banded(n, b->lower, b->upper, std::move(band));
    }
    const auto& lr = *s.as_low_rank();
    Vector d(n);
    for (std::size_t i = 0; i < n; ++i) {
        double pr = 0.0;
        for (std::size_t t = 0; t < lr.left.cols(); ++t) {
            pr += lr.left(i, t) * lr.right(i, t);
        }
        d[i] = diag[i] + pr;
    }
    return StructuredSquare::diag_plus_low_rank(std::move(d), lr.left, lr.right, -1);
}

} // namespace detail

/// Random MARE with strictly positive v: the off-diagonal structure of A and
/// D (dense, banded, or diagonal-plus-low-rank, chosen per matrix) and the
/// positive factors are drawn first, then each diagonal is solved from the
/// triplet identity so that W u = v holds by construction.
inline MareProblem gen_random(const RandomSpec& spec)
{
    detail::require(spec.m >= 1 && spec.n >= 1, "gen_random: m and n must be at least 1");
    SplitMix64 rng(spec.seed);
    auto fill = [&](std::size_t r, std::size_t c) {
        Matrix out(r, c);
        for (double& x : out.data()) {
            x = 0.05 + rng.uniform();
        }
        return out;
    };
    auto vec = [&](std::size_t len, double lo, double width) {
        Vector out(len);
        for (double& x : out) {
            x = lo + width * rng.uniform();
        }
        return out;
    };
    MareProblem p;
    const StructuredSquare a0 = detail::random_z_matrix(spec.m, rng);
    const StructuredSquare d0 = detail::random_z_matrix(spec.n, rng);
    p.bl = fill(spec.m, spec.p);
    p.br = fill(spec.n, spec.p);
    p.cl = fill(spec.n, spec.q);
    p.cr = fill(spec.m, spec.q);
    p.u1 = vec(spec.n, 0.5, 1.0);
    p.u2 = vec(spec.m, 0.5, 1.0);
    p.v1 = vec(spec.n, 0.0, spec.v_scale);
    p.v2 = vec(spec.m, 0.0, spec.v_scale);

    // diag_i = (v_i + (N u)_i + (coupling u)_i) / u_i
    const Matrix nd_u = apply_offdiag_negated(d0, Matrix::column(p.u1));
    const Matrix na_u = apply_offdiag_negated(a0, Matrix::column(p.u2));
    const Vector cu = matvec(p.cl, matvec_t(p.cr, p.u2));
    const Vector bu = matvec(p.bl, matvec_t(p.br, p.u1));
    Vector dd(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        dd[i] = (p.v1[i] + nd_u(i, 0) + cu[i]) / p.u1[i];
    }
    Vector ad(spec.m);
    for (std::size_t i = 0; i < spec.m; ++i) {
        ad[i] = (p.v2[i] + na_u(i, 0) + bu[i]) / p.u2[i];
    }
    p.a = detail::with_true_diagonal(a0, ad);
    p.d = detail::with_true_diagonal(d0, dd);
    return p;
}

} // namespace mare
