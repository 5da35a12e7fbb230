#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mare/mare.hpp"

namespace mare::cli {

enum ExitCode : int {
    kConverged = 0,
    kInputError = 1,
    kMaxIterations = 2,
    kKernelCap = 3,
    kVerifyFailure = 4,
};

inline int exit_code(Termination t)
{
    switch (t) {
    case Termination::Converged: return kConverged;
    case Termination::MaxIterations: return kMaxIterations;
    case Termination::KernelCapExceeded: return kKernelCap;
    }
    return kInputError;
}

inline StopKind parse_criterion(const std::string& name)
{
    if (name == "nres") return StopKind::NormalizedResidual;
    if (name == "rchange") return StopKind::RelativeChange;
    if (name == "erres") return StopKind::EntrywiseResidual;
    if (name == "ererr") return StopKind::EntrywiseError;
    throw InvalidArgument("unknown criterion '" + name + "'");
}

/// Options shared by every solving command. Unset fields take the
/// per-command defaults.
struct SolveOptions {
    std::string criterion = "erres";
    std::optional<double> tolerance;
    std::optional<std::size_t> max_iterations;
    std::size_t kernel_cap = 4096;
    std::optional<double> alpha;
    std::optional<double> beta;
};

inline ShiftPair resolve_shifts(const MareProblem& prob, const SolveOptions& opt)
{
    ShiftPair s = default_shifts(prob);
    if (opt.alpha) s.alpha = *opt.alpha;
    if (opt.beta) s.beta = *opt.beta;
    check_shifts(prob, s);
    return s;
}

inline StopCriteria resolve_criteria(const SolveOptions& opt, double default_tol,
                                     std::size_t default_max_iter,
                                     const std::optional<Matrix>& x_true)
{
    StopCriteria c;
    c.kind = parse_criterion(opt.criterion);
    c.tolerance = opt.tolerance.value_or(default_tol);
    c.max_iterations = opt.max_iterations.value_or(default_max_iter);
    c.kernel_row_cap = opt.kernel_cap;
    if (c.kind == StopKind::EntrywiseError) {
        if (!x_true) {
            throw InvalidArgument("criterion ererr needs X_true in the problem file");
        }
        c.x_true = x_true;
    }
    return c;
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) {
        throw InvalidArgument("cannot write '" + path + "'");
    }
    out << text;
}

/// Prints to `path`, or to `fallback` when the path is empty.
inline void emit(const std::string& path, const std::string& text, std::ostream& fallback)
{
    if (path.empty()) {
        fallback << text;
    } else {
        write_text(path, text);
    }
}

// ---------------------------------------------------------------- solve

struct SolveConfig {
    std::string input;
    SolveOptions solve;
    std::string out;  // report JSON; stdout when empty
    std::string csv;  // dense H
};

inline int cmd_solve(const SolveConfig& cfg, std::ostream& out, std::ostream& err)
{
    SolveReport rep;
    StopCriteria crit;
    LoadedProblem loaded;
    try {
        loaded = load_problem(cfg.input);
        const ShiftPair shifts = resolve_shifts(loaded.problem, cfg.solve);
        crit = resolve_criteria(cfg.solve, 1e-14, 20, loaded.x_true);
        rep = solve(loaded.problem, shifts, crit);
    } catch (const MareError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    Json j = report_to_json(rep, crit);
    j["erres"] = number_or_null(erres(loaded.problem, rep.h));
    if (loaded.x_true) {
        j["ererr"] = number_or_null(ererr(rep.h, *loaded.x_true));
    }
    j["frob_h"] = frobenius_norm(rep.h);
    j["rank_h"] = numerical_rank(rep.h);
    try {
        emit(cfg.out, j.dump(2) + "\n", out);
        if (!cfg.csv.empty()) {
            write_text(cfg.csv, matrix_to_csv(rep.h));
        }
    } catch (const MareError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return exit_code(rep.termination);
}

// ---------------------------------------------------------------- bench

inline constexpr const char* kBenchHeader = "method,m,n,erres,ererr,rank_h,frob_h,iters,seconds";

struct BenchRow {
    std::string method;
    std::size_t m = 0;
    std::size_t n = 0;
    double erres = 0.0;
    std::optional<double> ererr;
    std::size_t rank_h = 0;
    double frob_h = 0.0;
    std::size_t iters = 0;
    double seconds = 0.0;
};

inline std::string format_number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10e", x);
    return buf;
}

inline std::string format_row(const BenchRow& r)
{
    std::ostringstream os;
    os << r.method << ',' << r.m << ',' << r.n << ',' << format_number(r.erres) << ','
       << (r.ererr ? format_number(*r.ererr) : std::string()) << ',' << r.rank_h << ','
       << format_number(r.frob_h) << ',' << r.iters << ',';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", r.seconds);
    os << buf << '\n';
    return os.str();
}

inline BenchRow bench_dadda(const MareProblem& prob, const std::optional<Matrix>& x_true,
                            const SolveOptions& opt, double default_tol)
{
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const ShiftPair shifts = resolve_shifts(prob, opt);
    const StopCriteria crit = resolve_criteria(opt, default_tol, 20, x_true);
    const SolveReport rep = solve(prob, shifts, crit);
    BenchRow row;
    row.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    row.method = "dadda";
    row.m = prob.m();
    row.n = prob.n();
    row.erres = erres(prob, rep.h);
    if (x_true) row.ererr = ererr(rep.h, *x_true);
    row.rank_h = numerical_rank(rep.h);
    row.frob_h = frobenius_norm(rep.h);
    row.iters = rep.iterations;
    return row;
}

/// Dense doubling under the same shifts and stopping rule (ERres or
/// ERerr against X_true; the other criteria fall back to ERres).
inline BenchRow bench_oracle(const MareProblem& prob, const std::optional<Matrix>& x_true,
                             const SolveOptions& opt, double default_tol)
{
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const ShiftPair shifts = resolve_shifts(prob, opt);
    const double tol = opt.tolerance.value_or(default_tol);
    const std::size_t max_iter = opt.max_iterations.value_or(20);
    const bool by_error = opt.criterion == "ererr" && x_true;
    AddaState st = oracle_init(prob, shifts);
    Matrix h = oracle_h(st);
    while (true) {
        const double value = by_error ? ererr(h, *x_true) : erres(prob, h);
        if (value <= tol || st.k >= max_iter) {
            break;
        }
        st = oracle_step(st);
        h = oracle_h(st);
    }
    BenchRow row;
    row.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    row.method = "adda_oracle";
    row.m = prob.m();
    row.n = prob.n();
    row.erres = erres(prob, h);
    if (x_true) row.ererr = ererr(h, *x_true);
    row.rank_h = numerical_rank(h);
    row.frob_h = frobenius_norm(h);
    row.iters = st.k;
    return row;
}

inline std::vector<std::pair<std::size_t, std::size_t>> parse_pair_sizes(const std::string& text)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto x = item.find('x');
        if (x == std::string::npos) {
            throw InvalidArgument("size '" + item + "' is not of the form MxN");
        }
        try {
            out.emplace_back(std::stoul(item.substr(0, x)), std::stoul(item.substr(x + 1)));
        } catch (const std::exception&) {
            throw InvalidArgument("size '" + item + "' is not of the form MxN");
        }
    }
    return out;
}

inline std::vector<std::size_t> parse_sizes(const std::string& text)
{
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoul(item));
        } catch (const std::exception&) {
            throw InvalidArgument("size '" + item + "' is not a count");
        }
    }
    return out;
}

struct BenchConfig {
    /// bench-fluid: "MxN,..." pairs; bench-transport: "N,...".
    std::string sizes;
    std::optional<std::size_t> m;
    std::optional<std::size_t> n;
    std::uint64_t seed = 0;
    SolveOptions solve;
    std::string csv;  // stdout when empty
};

inline int run_bench(const std::vector<std::pair<MareProblem, std::optional<Matrix>>>& cases,
                     const BenchConfig& cfg, double default_tol, std::ostream& out,
                     std::ostream& err)
{
    std::string text = std::string(kBenchHeader) + "\n";
    try {
        for (const auto& [prob, x_true] : cases) {
            text += format_row(bench_dadda(prob, x_true, cfg.solve, default_tol));
            if (prob.m() + prob.n() <= kOracleSizeCap) {
                text += format_row(bench_oracle(prob, x_true, cfg.solve, default_tol));
            }
        }
        emit(cfg.csv, text, out);
    } catch (const MareError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kConverged;
}

inline int cmd_bench_fluid(const BenchConfig& cfg, std::ostream& out, std::ostream& err)
{
    std::vector<std::pair<MareProblem, std::optional<Matrix>>> cases;
    try {
        std::vector<std::pair<std::size_t, std::size_t>> sizes;
        if (cfg.m || cfg.n) {
            if (!cfg.m || !cfg.n) {
                throw InvalidArgument("bench-fluid needs both --m and --n");
            }
            sizes.emplace_back(*cfg.m, *cfg.n);
        } else {
            sizes = parse_pair_sizes(cfg.sizes.empty() ? "2x18,18x2,90x10,180x20" : cfg.sizes);
        }
        for (auto [m, n] : sizes) {
            auto [prob, x] = gen_fluid({m, n});
            cases.emplace_back(std::move(prob), std::move(x));
        }
    } catch (const MareError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return run_bench(cases, cfg, 1e-14, out, err);
}

inline int cmd_bench_transport(const BenchConfig& cfg, std::ostream& out, std::ostream& err)
{
    std::vector<std::pair<MareProblem, std::optional<Matrix>>> cases;
    try {
        std::vector<std::size_t> sizes;
        if (cfg.n) {
            sizes.push_back(*cfg.n);
        } else {
            sizes = parse_sizes(cfg.sizes.empty() ? "10,20,40,100" : cfg.sizes);
        }
        for (std::size_t n : sizes) {
            TransportSpec spec;
            spec.n = n;
            spec.seed = cfg.seed;
            cases.emplace_back(gen_transport(spec), std::nullopt);
        }
    } catch (const MareError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return run_bench(cases, cfg, 1e-13, out, err);
}

// ---------------------------------------------------------------- sweep

struct SweepConfig {
    std::size_t n = 10;
    std::uint64_t seed = 0;
    std::size_t points = 200;
    /// Small shifts need many doublings; a low cap keeps each sample cheap.
    SolveOptions solve = [] {
        SolveOptions o;
        o.kernel_cap = 512;
        return o;
    }();
    /// Files <out>_alpha.csv and <out>_beta.csv.
    std::string out = "sweep";
};

struct SweepRow {
    double shift = 0.0;
    std::size_t iters = 0;
    double erres = 0.0;
};

/// Evenly spaced admissible values top * i / points, i = 1..points; the
/// last one is the default shift. The other shift stays at its default
/// or override.
inline std::vector<SweepRow> sweep_shift(const MareProblem& prob, const SolveOptions& opt,
                                         std::size_t points, bool vary_alpha)
{
    const ShiftPair base = resolve_shifts(prob, opt);
    const ShiftPair top = default_shifts(prob);
    const StopCriteria crit = resolve_criteria(opt, 1e-13, 100, std::nullopt);
    std::vector<SweepRow> rows;
    rows.reserve(points);
    for (std::size_t i = 1; i <= points; ++i) {
        ShiftPair s = base;
        const double frac = static_cast<double>(i) / static_cast<double>(points);
        (vary_alpha ? s.alpha : s.beta) = (vary_alpha ? top.alpha : top.beta) * frac;
        const SolveReport rep = solve(prob, s, crit);
        rows.push_back({vary_alpha ? s.alpha : s.beta, rep.iterations, erres(prob, rep.h)});
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows, const char* name)
{
    std::string text = std::string(name) + ",iters,erres\n";
    for (const auto& r : rows) {
        char shift[32];
        std::snprintf(shift, sizeof shift, "%.17g", r.shift);  // round-trips exactly
        text += std::string(shift) + "," + std::to_string(r.iters) + "," +
                format_number(r.erres) + "\n";
    }
    return text;
}

inline int cmd_sweep(const SweepConfig& cfg, std::ostream& out, std::ostream& err)
{
    try {
        if (cfg.points == 0) {
            throw InvalidArgument("sweep needs at least one point");
        }
        TransportSpec spec;
        spec.n = cfg.n;
        spec.seed = cfg.seed;
        const MareProblem prob = gen_transport(spec);
        const auto alpha_rows = sweep_shift(prob, cfg.solve, cfg.points, true);
        const auto beta_rows = sweep_shift(prob, cfg.solve, cfg.points, false);
        write_text(cfg.out + "_alpha.csv", sweep_csv(alpha_rows, "alpha"));
        write_text(cfg.out + "_beta.csv", sweep_csv(beta_rows, "beta"));
        std::size_t jumps = 0;
        for (std::size_t i = 1; i < alpha_rows.size(); ++i) {
            const auto a = alpha_rows[i - 1].iters;
            const auto b = alpha_rows[i].iters;
            if ((a > b ? a - b : b - a) >= 2) ++jumps;
        }
        out << "wrote " << cfg.out << "_alpha.csv and " << cfg.out << "_beta.csv ("
            << cfg.points << " rows each, " << jumps << " alpha jump points)\n";
    } catch (const MareError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kConverged;
}

// ---------------------------------------------------------------- verify

enum class Fault { None, SignFlip };

struct VerifyConfig {
    /// fluid, transport, random or all.
    std::string family = "all";
    /// Per family: "MxN,..." for fluid, "N,..." for transport and random.
    std::string sizes;
    std::uint64_t seed = 0;
    /// Test hook: corrupt a checked quantity so the suite must fail.
    Fault fault = Fault::None;
};

struct VerifyFailure {
    std::string check;
    std::string instance;
    std::string detail;
};

class VerifyLog {
public:
    explicit VerifyLog(Fault fault) : fault_(fault) {}

    Fault fault() const noexcept { return fault_; }

    void expect(bool ok, const std::string& check, const std::string& instance,
                const std::string& detail)
    {
        ++checks_;
        if (!ok) failures_.push_back({check, instance, detail});
    }

    std::size_t checks() const noexcept { return checks_; }
    const std::vector<VerifyFailure>& failures() const noexcept { return failures_; }

private:
    Fault fault_;
    std::size_t checks_ = 0;
    std::vector<VerifyFailure> failures_;
};

inline std::string sci(double x) { return format_number(x); }

/// Runs dADDA step by step and checks, at every k: kernel triplet identity,
/// v^(k) >= 0, monotone H_k, and the final ERres / ERerr.
/// With check_final false the run may stop at max_k short of tol.
inline void verify_run(const MareProblem& prob, const std::optional<Matrix>& x_true,
                       const std::string& name, double tol, std::size_t max_k, VerifyLog& log,
                       bool check_final = true)
{
    const DaddaSolver solver(prob);
    DaddaState st = solver.initialize();
    Matrix h_prev;
    double final_erres = 0.0;
    Matrix h;
    while (true) {
        TripletRepresentation t = solver.kernel_triplet(st);
        if (log.fault() == Fault::SignFlip && st.k == 1 && !t.v.empty()) {
            t.v[0] = -std::max(t.v[0], 1.0);
        }
        bool nonneg = true;
        for (double x : t.v) nonneg = nonneg && x >= 0.0;
        log.expect(nonneg, "kernel_image_nonnegative", name, "k=" + std::to_string(st.k));

        // (I - YZ) u vs. v, relative to max(v). A triplet with negative v
        // is not a valid representation, so the identity is skipped.
        if (nonneg) {
            const Matrix m = matrix_from_triplet(t);
            const Vector mu = matvec(m, t.u);
            double worst = 0.0;
            double scale = 0.0;
            for (std::size_t i = 0; i < mu.size(); ++i) {
                worst = std::max(worst, std::abs(mu[i] - t.v[i]));
                scale = std::max(scale, std::abs(t.v[i]));
            }
            const double rel = scale > 0.0 ? worst / scale : worst;
            log.expect(rel <= 1e-12, "kernel_triplet_identity", name,
                       "k=" + std::to_string(st.k) + " rel=" + sci(rel));
        }

        h = st.h();
        if (!h_prev.empty()) {
            double drop = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i) {
                drop = std::max(drop, h_prev.data()[i] - h.data()[i]);
            }
            log.expect(drop <= 1e-15, "monotone_iterates", name,
                       "k=" + std::to_string(st.k) + " drop=" + sci(drop));
        }
        final_erres = erres(prob, h);
        if (final_erres <= tol || st.k >= max_k) break;
        h_prev = h;
        st = solver.advance(st);
    }
    if (!check_final) return;
    log.expect(final_erres <= tol, "final_erres", name, "erres=" + sci(final_erres));
    if (x_true) {
        const double e = ererr(h, *x_true);
        log.expect(e <= 1e-10, "final_ererr", name, "ererr=" + sci(e));
    }
}

/// dADDA H_k against the dense oracle for k <= 5.
inline void verify_oracle(const MareProblem& prob, const std::string& name, VerifyLog& log)
{
    const DaddaSolver solver(prob);
    DaddaState st = solver.initialize();
    AddaState ref = oracle_init(prob, solver.shifts());
    for (std::size_t k = 0; k <= 5; ++k) {
        const Matrix h = st.h();
        const Matrix r = oracle_h(ref);
        double worst = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            if (r.data()[i] > 1e-30) {
                worst = std::max(worst, std::abs(h.data()[i] - r.data()[i]) / r.data()[i]);
            }
        }
        log.expect(worst <= 1e-10, "oracle_agreement", name,
                   "k=" + std::to_string(k) + " rel=" + sci(worst));
        if (k == 5) break;
        st = solver.advance(st);
        ref = oracle_step(ref);
    }
}

inline Json verify_summary(const VerifyLog& log)
{
    Json failures = Json::array();
    for (const auto& f : log.failures()) {
        failures.push_back({{"check", f.check}, {"instance", f.instance}, {"detail", f.detail}});
    }
    return {{"checks", log.checks()},
            {"failed", log.failures().size()},
            {"failures", failures}};
}

inline int cmd_verify(const VerifyConfig& cfg, std::ostream& out, std::ostream& err)
{
    VerifyLog log(cfg.fault);
    const bool all = cfg.family == "all";
    try {
        if (!all && cfg.family != "fluid" && cfg.family != "transport" && cfg.family != "random") {
            throw InvalidArgument("unknown family '" + cfg.family + "'");
        }
        if (all || cfg.family == "fluid") {
            const auto sizes = parse_pair_sizes(
                (!all && !cfg.sizes.empty()) ? cfg.sizes : "2x18,18x2,90x10");
            for (auto [m, n] : sizes) {
                auto [prob, x] = gen_fluid({m, n});
                verify_run(prob, x, "fluid " + std::to_string(m) + "x" + std::to_string(n),
                           1e-14, 20, log);
            }
        }
        if (all || cfg.family == "transport") {
            const auto sizes = parse_sizes((!all && !cfg.sizes.empty()) ? cfg.sizes : "10,20");
            for (std::size_t n : sizes) {
                TransportSpec spec;
                spec.n = n;
                spec.seed = cfg.seed;
                // Capped at k = 6 since the kernel grows as 2^k. Small shifts
                // converge slowly, so only the per-step invariants are checked.
                verify_run(gen_transport(spec), std::nullopt,
                           "transport n=" + std::to_string(n) + " seed=" + std::to_string(cfg.seed),
                           1e-13, 6, log, false);
            }
        }
        if (all || cfg.family == "random") {
            const auto sizes = parse_sizes((!all && !cfg.sizes.empty()) ? cfg.sizes : "6,12");
            for (std::size_t n : sizes) {
                RandomSpec spec;
                spec.m = n;
                spec.n = n;
                spec.p = 2;
                spec.q = 1;
                spec.seed = cfg.seed;
                verify_oracle(gen_random(spec),
                              "random n=" + std::to_string(n) + " seed=" + std::to_string(cfg.seed),
                              log);
            }
        }
    } catch (const MareError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    out << verify_summary(log).dump(2) << '\n';
    return log.failures().empty() ? kConverged : kVerifyFailure;
}

// ---------------------------------------------------------------- generators

struct GenConfig {
    std::size_t m = 2;
    std::size_t n = 18;
    std::uint64_t seed = 0;
    std::string out;  // stdout when empty
};

inline int cmd_gen_fluid(const GenConfig& cfg, std::ostream& out, std::ostream& err)
{
    try {
        auto [prob, x] = gen_fluid({cfg.m, cfg.n});
        emit(cfg.out, problem_to_json(prob, x).dump(2) + "\n", out);
    } catch (const MareError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kConverged;
}

inline int cmd_gen_transport(const GenConfig& cfg, std::ostream& out, std::ostream& err)
{
    try {
        TransportSpec spec;
        spec.n = cfg.n;
        spec.seed = cfg.seed;
        emit(cfg.out, problem_to_json(gen_transport(spec)).dump(2) + "\n", out);
    } catch (const MareError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kConverged;
}

} // namespace mare::cli
