#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "mare_commands.hpp"

namespace {

using namespace mare::cli;

/// Solver flags common to solve, bench-* and sweep.
void add_solve_flags(CLI::App* app, SolveOptions& opt)
{
    app->add_option("--criterion", opt.criterion, "Stopping criterion")
        ->check(CLI::IsMember({"nres", "rchange", "erres", "ererr"}));
    app->add_option("--tol", opt.tolerance, "Tolerance in (0, 1)");
    app->add_option("--max-iter", opt.max_iterations, "Maximum number of doublings");
    app->add_option("--kernel-cap", opt.kernel_cap, "Largest kernel order allowed")
        ->capture_default_str();
    app->add_option("--alpha", opt.alpha, "Shift alpha, 0 <= alpha <= 1/max a_ii");
    app->add_option("--beta", opt.beta, "Shift beta, 0 <= beta <= 1/max d_jj");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Accurate doubling solver for M-matrix algebraic Riccati equations"};
    app.require_subcommand(1);

    SolveConfig solve_cfg;
    auto* solve = app.add_subcommand("solve", "Solve a problem given as JSON");
    solve->add_option("--input", solve_cfg.input, "Problem JSON")->required();
    solve->add_option("--out", solve_cfg.out, "Report JSON (stdout if omitted)");
    solve->add_option("--csv", solve_cfg.csv, "Write the dense solution as CSV");
    add_solve_flags(solve, solve_cfg.solve);

    BenchConfig fluid_cfg;
    auto* fluid = app.add_subcommand("bench-fluid", "Fluid-queue family benchmark");
    fluid->add_option("--sizes", fluid_cfg.sizes, "Comma list of MxN (default 2x18,18x2,90x10,180x20)");
    fluid->add_option("--m", fluid_cfg.m, "Single size: m");
    fluid->add_option("--n", fluid_cfg.n, "Single size: n");
    fluid->add_option("--csv", fluid_cfg.csv, "CSV output (stdout if omitted)");
    add_solve_flags(fluid, fluid_cfg.solve);

    BenchConfig transport_cfg;
    auto* transport = app.add_subcommand("bench-transport", "Transport family benchmark");
    transport->add_option("--sizes", transport_cfg.sizes, "Comma list of n (default 10,20,40,100)");
    transport->add_option("--n", transport_cfg.n, "Single size n");
    transport->add_option("--seed", transport_cfg.seed, "Generator seed")->capture_default_str();
    transport->add_option("--csv", transport_cfg.csv, "CSV output (stdout if omitted)");
    add_solve_flags(transport, transport_cfg.solve);

    SweepConfig sweep_cfg;
    auto* sweep = app.add_subcommand("sweep", "Iterations versus shift on a transport instance");
    sweep->add_option("--n", sweep_cfg.n, "Transport size")->capture_default_str();
    sweep->add_option("--seed", sweep_cfg.seed, "Generator seed")->capture_default_str();
    sweep->add_option("--points", sweep_cfg.points, "Samples per shift")->capture_default_str();
    sweep->add_option("--out", sweep_cfg.out, "Output prefix")->capture_default_str();
    add_solve_flags(sweep, sweep_cfg.solve);

    VerifyConfig verify_cfg;
    std::string fault = "none";
    auto* verify = app.add_subcommand("verify", "Run invariant checks on generated instances");
    verify->add_option("--family", verify_cfg.family, "fluid, transport, random or all")
        ->check(CLI::IsMember({"fluid", "transport", "random", "all"}))
        ->capture_default_str();
    verify->add_option("--sizes", verify_cfg.sizes, "Sizes for a single family");
    verify->add_option("--seed", verify_cfg.seed, "Generator seed")->capture_default_str();
    verify->add_option("--inject-fault", fault, "Test hook: none or sign-flip")
        ->check(CLI::IsMember({"none", "sign-flip"}));

    GenConfig gen_fluid_cfg;
    auto* gen_fluid = app.add_subcommand("gen-fluid", "Write a fluid-queue problem as JSON");
    gen_fluid->add_option("--m", gen_fluid_cfg.m)->capture_default_str();
    gen_fluid->add_option("--n", gen_fluid_cfg.n)->capture_default_str();
    gen_fluid->add_option("--out", gen_fluid_cfg.out, "Output path (stdout if omitted)");

    GenConfig gen_transport_cfg;
    gen_transport_cfg.n = 10;
    auto* gen_transport = app.add_subcommand("gen-transport", "Write a transport problem as JSON");
    gen_transport->add_option("--n", gen_transport_cfg.n)->capture_default_str();
    gen_transport->add_option("--seed", gen_transport_cfg.seed)->capture_default_str();
    gen_transport->add_option("--out", gen_transport_cfg.out, "Output path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kInputError;
    }

    if (*solve) return cmd_solve(solve_cfg, std::cout, std::cerr);
    if (*fluid) return cmd_bench_fluid(fluid_cfg, std::cout, std::cerr);
    if (*transport) return cmd_bench_transport(transport_cfg, std::cout, std::cerr);
    if (*sweep) return cmd_sweep(sweep_cfg, std::cout, std::cerr);
    if (*verify) {
        verify_cfg.fault = fault == "sign-flip" ? Fault::SignFlip : Fault::None;
        return cmd_verify(verify_cfg, std::cout, std::cerr);
    }
    if (*gen_fluid) return cmd_gen_fluid(gen_fluid_cfg, std::cout, std::cerr);
    if (*gen_transport) return cmd_gen_transport(gen_transport_cfg, std::cout, std::cerr);
    return kInputError;
}
