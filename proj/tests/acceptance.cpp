// Acceptance checks: one PASS/FAIL line per criterion with pinned tolerances.
// Usage: acceptance [--only N[,N...]] [--allow-fail N[,N...]]
// --allow-fail keeps the exit status at 0 for the listed criteria; their
// lines still read FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "../tools/mare_commands.hpp"

using mare::Matrix;
using mare::Vector;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

/// Worst decrease H_k - H_{k+1} over all converged runs with dense
/// iterates, collected for the monotonicity criterion.
struct MonotoneLog {
    double worst = 0.0;
    std::size_t runs = 0;
    void add(const mare::SolveReport& rep)
    {
        if (rep.termination != mare::Termination::Converged) return;
        worst = std::max(worst, rep.max_decrease);
        ++runs;
    }
};

MonotoneLog g_monotone;

// 1 ---------------------------------------------------------------------------
Outcome fluid_golden()
{
    const auto t0 = Clock::now();
    bool ok = true;
    double worst_erres = 0.0;
    double worst_ererr = 0.0;
    std::ostringstream its;
    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{2, 18}, {18, 2}, {90, 10}, {180, 20}}) {
        auto [p, x] = mare::gen_fluid({m, n});
        mare::StopCriteria c;
        c.tolerance = 1e-14;
        const auto rep = mare::DaddaSolver(p).solve(c);
        g_monotone.add(rep);
        const double e = mare::erres(p, rep.h);
        const double r = mare::ererr(rep.h, x);
        const double fx = mare::frobenius_norm(x);
        ok = ok && rep.termination == mare::Termination::Converged && rep.iterations == 4 &&
             e <= 1e-14 && r <= 1e-10 && mare::numerical_rank(rep.h) == 1 &&
             std::abs(mare::frobenius_norm(rep.h) - fx) <= 1e-6 * fx;
        worst_erres = std::max(worst_erres, e);
        worst_ererr = std::max(worst_ererr, r);
        its << rep.iterations << ' ';
    }
    const double t = seconds_since(t0);
    ok = ok && t < 5.0;
    return {ok, "iters " + its.str() + "erres<=" + fmt("%.2e", worst_erres) + " ererr<=" +
                    fmt("%.2e", worst_ererr) + " time " + fmt("%.2fs", t)};
}

// 2 ---------------------------------------------------------------------------
Outcome oracle_equivalence()
{
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::size_t compared = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 gen(1000 + seed);
        std::uniform_int_distribution<std::size_t> size(4, 30);
        std::uniform_int_distribution<std::size_t> rank(1, 3);
        mare::RandomSpec spec;
        spec.m = size(gen);
        spec.n = size(gen);
        spec.p = rank(gen);
        spec.q = rank(gen);
        spec.seed = seed;
        const auto p = mare::gen_random(spec);
        const mare::DaddaSolver s(p);
        auto st = s.initialize();
        auto ref = mare::oracle_init(p, s.shifts());
        for (int k = 0; k <= 5; ++k) {
            const Matrix h = st.h();
            const Matrix r = mare::oracle_h(ref);
            for (std::size_t i = 0; i < h.size(); ++i) {
                if (r.data()[i] > 1e-30) {
                    worst = std::max(worst, std::abs(h.data()[i] - r.data()[i]) / r.data()[i]);
                    ++compared;
                }
            }
            if (k < 5) {
                st = s.advance(st);
                ref = mare::oracle_step(ref);
            }
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-10 && t < 30.0 && compared > 0,
            "max rel " + fmt("%.2e", worst) + " over " + std::to_string(compared) +
                " entries, time " + fmt("%.2fs", t)};
}

// 3 ---------------------------------------------------------------------------
Outcome kernel_triplet_identity()
{
    double worst = 0.0;
    bool nonneg = true;
    for (std::size_t n : {10u, 20u, 40u}) {
        mare::TransportSpec spec;
        spec.n = n;
        const mare::DaddaSolver s(mare::gen_transport(spec));
        auto st = s.initialize();
        for (std::size_t k = 0; k <= 6; ++k) {
            nonneg = nonneg && mare::all_nonnegative(st.v1k) && mare::all_nonnegative(st.v2k);
            const auto t = s.kernel_triplet(st);
            Matrix m = oracle::naive_matmul(st.y, st.z);
            for (double& x : m.data()) x = -x;
            for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += 1.0;
            const Vector mu = mare::matvec(m, t.u);
            const double scale = mare::max_abs(t.v);
            for (std::size_t i = 0; i < mu.size(); ++i) {
                worst = std::max(worst, std::abs(mu[i] - t.v[i]) / scale);
            }
            if (k < 6) st = s.advance(st);
        }
    }
    return {worst <= 1e-12 && nonneg,
            "max rel residual " + fmt("%.2e", worst) + (nonneg ? ", v^(k) >= 0" : ", negative v^(k)")};
}

// 4 ---------------------------------------------------------------------------
Outcome kernel_m_matrix()
{
    double most_negative = 0.0;
    std::vector<mare::MareProblem> probs;
    for (std::size_t n : {6u, 10u}) {
        mare::TransportSpec spec;
        spec.n = n;
        spec.seed = 1;
        probs.push_back(mare::gen_transport(spec));
    }
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        mare::RandomSpec spec;
        spec.m = 7;
        spec.n = 5;
        spec.p = 2;
        spec.q = 1 + seed % 2;
        spec.seed = 50 + seed;
        probs.push_back(mare::gen_random(spec));
    }
    for (const auto& p : probs) {
        const mare::DaddaSolver s(p);
        auto st = s.initialize();
        for (std::size_t k = 0; k <= 4; ++k) {
            Matrix m = oracle::naive_matmul(st.y, st.z);
            for (double& x : m.data()) x = -x;
            for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += 1.0;
            const Eigen::MatrixXd inv = mare::detail::to_eigen(m).inverse();
            most_negative = std::min(most_negative, inv.minCoeff());
            if (k < 4) st = s.advance(st);
        }
    }
    return {most_negative >= -1e-12, "min entry of (I-YZ)^{-1} " + fmt("%.2e", most_negative)};
}

// 5 ---------------------------------------------------------------------------
Outcome gth_accuracy()
{
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    std::size_t sign_violations = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 12);
        const double scale = trial % 2 == 0 ? 1e-10 : 1.0;
        const auto t = oracle::random_triplet(n, scale, gen);
        const auto f = mare::gth_factorize({t.offdiag, t.u, t.v});
        Vector b(n);
        for (double& x : b) x = unit(gen);
        const Vector x = f.solve(b);
        const auto ref = oracle::mp_solve(oracle::mp_from_triplet(t.offdiag, t.u, t.v),
                                          std::vector<oracle::mp>(b.begin(), b.end()));
        for (std::size_t i = 0; i < n; ++i) {
            if (x[i] < 0.0) ++sign_violations;
            const oracle::mp rel = abs((oracle::mp(x[i]) - ref[i]) / ref[i]);
            worst = std::max(worst, static_cast<double>(rel));
        }
    }
    return {worst <= 1e-13 && sign_violations == 0,
            "max rel " + fmt("%.2e", worst) + ", sign violations " + std::to_string(sign_violations)};
}

// 6 ---------------------------------------------------------------------------
struct RankOne {
    Vector d;
    Matrix a;
    Matrix b;
    Vector u;
    Vector v;
};

RankOne rank_one_instance(std::size_t n, std::mt19937_64& gen, double v_scale)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    RankOne r{Vector(n), Matrix(n, 1), Matrix(n, 1), Vector(n), Vector(n)};
    double btu = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        r.a(i, 0) = unit(gen);
        r.b(i, 0) = unit(gen);
        r.u[i] = 0.5 + unit(gen);
        btu += r.b(i, 0) * r.u[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        r.v[i] = v_scale * unit(gen);
        r.d[i] = (r.v[i] + r.a(i, 0) * btu) / r.u[i];
    }
    return r;
}

double time_smw(std::size_t n)
{
    std::mt19937_64 gen(n);
    const RankOne r = rank_one_instance(n, gen, 1.0);
    const Matrix rhs = Matrix::ones(n, 1);
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 15; ++rep) {
        const auto t0 = Clock::now();
        const Matrix x = mare::smw_solve_diag_lowrank(r.d, r.a, r.b, r.u, r.v, rhs);
        best = std::min(best, seconds_since(t0));
        if (x(0, 0) < 0.0) return -1.0;
    }
    return best;
}

Outcome smw_fast_path()
{
    std::mt19937_64 gen(606);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 30);
        const RankOne r = rank_one_instance(n, gen, trial % 4 == 0 ? 1e-9 : 1.0);
        Vector bvec(n);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (double& x : bvec) x = unit(gen);
        const Matrix x = mare::smw_solve_diag_lowrank(r.d, r.a, r.b, r.u, r.v, Matrix::column(bvec));
        const Matrix off = mare::off_diagonal(oracle::naive_matmul(r.a, r.b.transpose()));
        const Vector xd = mare::gth_factorize({off, r.u, r.v}).solve(bvec);
        for (std::size_t i = 0; i < n; ++i) {
            worst = std::max(worst, std::abs(x(i, 0) - xd[i]) / xd[i]);
        }
    }
    const double t1 = time_smw(100000);
    const double t2 = time_smw(200000);
    const double ratio = t2 / t1;
    return {worst <= 1e-14 && ratio <= 2.6 && t1 > 0.0,
            "max rel vs dense GTH " + fmt("%.2e", worst) + ", time ratio " + fmt("%.2f", ratio) +
                " (" + fmt("%.2e", t1) + "s / " + fmt("%.2e", t2) + "s)"};
}

// 7 ---------------------------------------------------------------------------
Outcome transport_convergence()
{
    bool ok = true;
    std::ostringstream detail;
    for (std::size_t n : {10u, 20u, 40u, 100u}) {
        std::vector<std::size_t> iters;
        std::size_t converged = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            mare::TransportSpec spec;
            spec.n = n;
            spec.seed = seed;
            mare::StopCriteria c;
            c.tolerance = 1e-12;
            c.max_iterations = 30;
            // k <= 10; one more doubling costs minutes with a dense kernel.
            c.kernel_row_cap = 1024;
            const auto rep = mare::DaddaSolver(mare::gen_transport(spec)).solve(c);
            g_monotone.add(rep);
            if (rep.termination == mare::Termination::Converged) ++converged;
            iters.push_back(rep.termination == mare::Termination::Converged
                                ? rep.iterations
                                : std::numeric_limits<std::size_t>::max());
        }
        std::sort(iters.begin(), iters.end());
        // Median of 20: mean of the 10th and 11th, non-converged counted as infinite.
        const std::size_t inf = std::numeric_limits<std::size_t>::max();
        const double median = iters[10] == inf
                                  ? std::numeric_limits<double>::infinity()
                                  : 0.5 * static_cast<double>(iters[9] + iters[10]);
        ok = ok && converged >= 18 && median <= 10.0;
        detail << "n=" << n << ": " << converged << "/20 median " << fmt("%.1f", median);
        detail << (n == 100 ? "" : "; ");
    }
    return {ok, detail.str()};
}

// 8 ---------------------------------------------------------------------------
double time_fixed_fluid(std::size_t m, std::size_t n)
{
    auto [p, x] = mare::gen_fluid({m, n});
    mare::StopCriteria c;
    c.kind = mare::StopKind::FixedIterations;
    c.max_iterations = 4;
    c.form_solution = false;
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 3; ++rep) {
        const auto t0 = Clock::now();
        const auto r = mare::DaddaSolver(p).solve(c);
        best = std::min(best, seconds_since(t0));
        if (r.iterations != 4) return -1.0;
    }
    return best;
}

Outcome per_iteration_scaling()
{
    const double t1 = time_fixed_fluid(3600, 400);
    const double t2 = time_fixed_fluid(7200, 800);
    const double ratio = t2 / t1;
    return {t1 > 0.0 && t2 > 0.0 && ratio <= 3.0 && t2 < 60.0,
            "time ratio " + fmt("%.2f", ratio) + " (" + fmt("%.3f", t1) + "s / " + fmt("%.3f", t2) + "s)"};
}

// 9 ---------------------------------------------------------------------------
Outcome monotone()
{
    return {g_monotone.runs > 0 && g_monotone.worst <= 1e-15,
            "worst decrease " + fmt("%.2e", g_monotone.worst) + " over " +
                std::to_string(g_monotone.runs) + " converged runs"};
}

// 10 --------------------------------------------------------------------------
Outcome sweep_smoke()
{
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mare_acceptance";
    fs::create_directories(dir);
    mare::cli::SweepConfig cfg;
    cfg.n = 10;
    cfg.out = (dir / "sweep").string();
    std::ostringstream out;
    std::ostringstream err;
    if (mare::cli::cmd_sweep(cfg, out, err) != 0) return {false, "sweep failed: " + err.str()};
    std::size_t rows = 0;
    bool finite = true;
    std::size_t jumps = 0;
    for (const char* which : {"_alpha.csv", "_beta.csv"}) {
        std::ifstream in(cfg.out + which);
        std::string line;
        std::getline(in, line);
        long prev = -1;
        while (std::getline(in, line)) {
            ++rows;
            std::stringstream ss(line);
            std::string a;
            std::string it;
            std::string e;
            std::getline(ss, a, ',');
            std::getline(ss, it, ',');
            std::getline(ss, e, ',');
            finite = finite && std::isfinite(std::stod(a)) && std::isfinite(std::stod(e));
            const long cur = std::stol(it);
            if (std::string(which) == "_alpha.csv" && prev >= 0 && std::labs(cur - prev) >= 2) ++jumps;
            prev = cur;
        }
    }
    return {rows == 400 && finite,
            std::to_string(rows) + " rows, " + (finite ? "all finite" : "non-finite values") +
                ", alpha jump points " + std::to_string(jumps) + " (recorded)"};
}

std::set<int> parse_list(const std::string& s)
{
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    std::set<int> allowed;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--only") only = parse_list(argv[i + 1]);
        else if (flag == "--allow-fail") allowed = parse_list(argv[i + 1]);
        else {
            std::fprintf(stderr, "unknown flag %s\n", flag.c_str());
            return 2;
        }
    }

    // Criterion 9 aggregates the runs of 1 and 7, so it goes last.
    const std::vector<std::pair<int, std::pair<const char*, std::function<Outcome()>>>> criteria = {
        {1, {"fluid-flow golden run", fluid_golden}},
        {2, {"oracle equivalence", oracle_equivalence}},
        {3, {"kernel triplet identity", kernel_triplet_identity}},
        {4, {"M-matrix kernels", kernel_m_matrix}},
        {5, {"GTH accuracy", gth_accuracy}},
        {6, {"SMW fast path", smw_fast_path}},
        {7, {"transport convergence", transport_convergence}},
        {8, {"per-iteration scaling", per_iteration_scaling}},
        {10, {"sweep smoke test", sweep_smoke}},
        {9, {"monotone convergence", monotone}},
    };

    int failures = 0;
    for (const auto& [id, entry] : criteria) {
        if (!only.empty() && !only.count(id)) continue;
        const auto& [name, run] = entry;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool tolerated = !o.pass && allowed.count(id);
        std::printf("%s %2d %s: %s%s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
                    tolerated ? " [known failure, see README]" : "");
        std::fflush(stdout);
        if (!o.pass && !tolerated) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
