#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using mare::Matrix;

TEST(AddaOracle, ConvergesToFluidSolution)
{
    auto [p, x] = mare::gen_fluid({18, 2});
    auto st = mare::oracle_init(p, mare::default_shifts(p));
    for (int k = 0; k < 6; ++k) st = mare::oracle_step(st);
    EXPECT_LE(mare::ererr(mare::oracle_h(st), x), 1e-11);
}

TEST(AddaOracle, InitialIterateSolvesBlockSystem)
{
    mare::TransportSpec spec;
    spec.n = 5;
    const auto p = mare::gen_transport(spec);
    const auto s = mare::default_shifts(p);
    const auto st = mare::oracle_init(p, s);
    // From the block system: -alpha B E0 + A_beta H0 = beta B.
    const Matrix b = mare::matmul(p.bl, p.br.transpose());
    Matrix ab = mare::scaled(p.a.to_dense(), s.beta);
    for (std::size_t i = 0; i < ab.rows(); ++i) ab(i, i) += 1.0;
    const Matrix e0 = mare::detail::from_eigen(st.e);
    const Matrix h0 = mare::oracle_h(st);
    const Matrix lhs = oracle::naive_matmul(ab, h0);
    const Matrix be = oracle::naive_matmul(b, e0);
    for (std::size_t k = 0; k < lhs.size(); ++k) {
        EXPECT_NEAR(lhs.data()[k] - s.alpha * be.data()[k], s.beta * b.data()[k], 1e-13);
    }
}

TEST(AddaOracle, SizeCap)
{
    auto [p, x] = mare::gen_fluid({150, 60});
    EXPECT_THROW(mare::oracle_init(p, mare::default_shifts(p)), mare::InvalidArgument);
}

TEST(AddaOracle, DaddaAgreesOnRandomInstances)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        mare::RandomSpec spec;
        spec.m = 6 + seed;
        spec.n = 5 + 2 * seed;
        spec.p = 1 + seed % 3;
        spec.q = 1 + (seed + 1) % 3;
        spec.seed = seed;
        const auto p = mare::gen_random(spec);
        const mare::DaddaSolver s(p);
        auto st = s.initialize();
        auto ref = mare::oracle_init(p, s.shifts());
        for (int k = 0; k <= 4; ++k) {
            const Matrix h = st.h();
            const Matrix r = mare::oracle_h(ref);
            for (std::size_t i = 0; i < h.size(); ++i) {
                if (r.data()[i] > 1e-30) {
                    EXPECT_LE(std::abs(h.data()[i] - r.data()[i]) / r.data()[i], 1e-10)
                        << "seed " << seed << " k " << k;
                }
            }
            st = s.advance(st);
            ref = mare::oracle_step(ref);
        }
    }
}
