// Transport MARE with structured A, D, plus the dual solution G.
#include <cstdio>

#include "mare/mare.hpp"

int main()
{
    mare::TransportSpec spec;
    spec.n = 40;
    spec.seed = 0;
    const mare::TransportInstance inst = mare::gen_transport_instance(spec);
    std::printf("physical alpha=%.4f beta=%.4f\n", inst.alpha_t, inst.beta_t);

    const mare::DaddaSolver solver(inst.problem);
    std::printf("shifts alpha=%.4e beta=%.4e\n", solver.shifts().alpha, solver.shifts().beta);

    mare::StopCriteria crit;
    crit.tolerance = 1e-13;
    const mare::SolveReport rep = solver.solve(crit);
    std::printf("%s after %zu doublings, erres=%.3e, rank(H)=%zu, ||H||_F=%.6f\n",
                mare::to_string(rep.termination), rep.iterations, rep.records.back().value,
                mare::numerical_rank(rep.h), mare::frobenius_norm(rep.h));

    const mare::Matrix g = solver.dual_solution(rep.final_state);
    std::printf("||G||_F=%.6f\n", mare::frobenius_norm(g));
    return rep.termination == mare::Termination::Converged ? 0 : 1;
}
