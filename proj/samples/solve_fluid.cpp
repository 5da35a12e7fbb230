// Solves the fluid-queue MARE and compares against the known solution.
#include <cstdio>

#include "mare/mare.hpp"

int main()
{
    auto [prob, x_true] = mare::gen_fluid({18, 2});

    mare::StopCriteria crit;  // entrywise residual, tol 1e-14
    const mare::SolveReport rep = mare::DaddaSolver(prob).solve(crit);

    for (const auto& r : rep.records) {
        std::printf("k=%zu  erres=%.3e  kernel=%zu\n", r.k, r.value, r.kernel_order);
    }
    std::printf("%s after %zu doublings\n", mare::to_string(rep.termination), rep.iterations);
    std::printf("||H||_F = %.10f  rank = %zu  ererr = %.3e\n", mare::frobenius_norm(rep.h),
                mare::numerical_rank(rep.h), mare::ererr(rep.h, x_true));
    return rep.termination == mare::Termination::Converged ? 0 : 1;
}
