#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../tools/mare_commands.hpp"

namespace fs = std::filesystem;
using namespace mare::cli;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "mare_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

TEST(Cli, SolveFluidFile)
{
    const fs::path input = scratch("fluid.json");
    std::ostringstream out;
    std::ostringstream err;
    ASSERT_EQ(cmd_gen_fluid({2, 18, 0, input.string()}, out, err), kConverged);

    SolveConfig cfg;
    cfg.input = input.string();
    cfg.csv = scratch("fluid_h.csv").string();
    ASSERT_EQ(cmd_solve(cfg, out, err), kConverged) << err.str();
    const auto j = mare::Json::parse(out.str());
    EXPECT_EQ(j["iterations"], 4);
    EXPECT_EQ(j["rank_h"], 1);
    EXPECT_LE(j["ererr"].get<double>(), 1e-10);
    EXPECT_EQ(lines(slurp(cfg.csv)).size(), 2u);
}

TEST(Cli, SolveExitCodes)
{
    const fs::path input = scratch("fluid_codes.json");
    std::ostringstream out;
    std::ostringstream err;
    ASSERT_EQ(cmd_gen_fluid({2, 18, 0, input.string()}, out, err), kConverged);

    SolveConfig cfg;
    cfg.input = input.string();
    cfg.solve.max_iterations = 0;
    EXPECT_EQ(cmd_solve(cfg, out, err), kMaxIterations);

    cfg.solve.max_iterations.reset();
    cfg.solve.kernel_cap = 4;
    EXPECT_EQ(cmd_solve(cfg, out, err), kKernelCap);

    cfg.solve.kernel_cap = 4096;
    cfg.solve.alpha = 1.0;  // above 1/max a_ii
    EXPECT_EQ(cmd_solve(cfg, out, err), kInputError);

    const fs::path truncated = scratch("truncated.json");
    {
        std::ofstream f(truncated);
        f << "{\"m\": 2, \"n\"";
    }
    SolveConfig bad;
    bad.input = truncated.string();
    EXPECT_EQ(cmd_solve(bad, out, err), kInputError);
}

TEST(Cli, SolveWithErerrNeedsTruth)
{
    const fs::path input = scratch("transport.json");
    std::ostringstream out;
    std::ostringstream err;
    ASSERT_EQ(cmd_gen_transport({0, 10, 3, input.string()}, out, err), kConverged);
    SolveConfig cfg;
    cfg.input = input.string();
    cfg.solve.criterion = "ererr";
    EXPECT_EQ(cmd_solve(cfg, out, err), kInputError);
}

TEST(Cli, BenchFluidRows)
{
    BenchConfig cfg;
    cfg.m = 2;
    cfg.n = 18;
    std::ostringstream out;
    std::ostringstream err;
    ASSERT_EQ(cmd_bench_fluid(cfg, out, err), kConverged) << err.str();
    const auto ls = lines(out.str());
    ASSERT_EQ(ls.size(), 3u);
    EXPECT_EQ(ls[0], kBenchHeader);
    const auto dadda = split(ls[1]);
    ASSERT_EQ(dadda.size(), 9u);
    EXPECT_EQ(dadda[0], "dadda");
    EXPECT_EQ(dadda[7], "4");
    EXPECT_EQ(split(ls[2])[0], "adda_oracle");
}

TEST(Cli, BenchSkipsOracleOnLargeSizes)
{
    BenchConfig cfg;
    cfg.sizes = "180x20,300x30";
    std::ostringstream out;
    std::ostringstream err;
    ASSERT_EQ(cmd_bench_fluid(cfg, out, err), kConverged) << err.str();
    const auto ls = lines(out.str());
    // 180 + 20 = 200 keeps the oracle; 330 does not.
    ASSERT_EQ(ls.size(), 4u);
    EXPECT_EQ(split(ls[2])[0], "adda_oracle");
    EXPECT_EQ(split(ls[3])[0], "dadda");
}

TEST(Cli, BenchTransportLeavesErerrBlank)
{
    BenchConfig cfg;
    cfg.n = 10;
    cfg.seed = 7;
    std::ostringstream out;
    std::ostringstream err;
    ASSERT_EQ(cmd_bench_transport(cfg, out, err), kConverged) << err.str();
    const auto ls = lines(out.str());
    ASSERT_EQ(ls.size(), 3u);
    const auto row = split(ls[1]);
    EXPECT_EQ(row[4], "");
    EXPECT_LE(std::stoul(row[7]), 12u);
}

TEST(Cli, BenchIsDeterministicApartFromSeconds)
{
    BenchConfig cfg;
    cfg.sizes = "10,20";
    cfg.seed = 4;
    std::ostringstream a;
    std::ostringstream b;
    std::ostringstream err;
    ASSERT_EQ(cmd_bench_transport(cfg, a, err), kConverged);
    ASSERT_EQ(cmd_bench_transport(cfg, b, err), kConverged);
    const auto la = lines(a.str());
    const auto lb = lines(b.str());
    ASSERT_EQ(la.size(), lb.size());
    for (std::size_t i = 1; i < la.size(); ++i) {
        auto ra = split(la[i]);
        auto rb = split(lb[i]);
        ra.pop_back();
        rb.pop_back();
        EXPECT_EQ(ra, rb);
    }
}

TEST(Cli, SweepSinglePointEqualsSolve)
{
    SweepConfig cfg;
    cfg.n = 10;
    cfg.seed = 0;
    cfg.points = 1;
    cfg.out = scratch("sweep1").string();
    std::ostringstream out;
    std::ostringstream err;
    ASSERT_EQ(cmd_sweep(cfg, out, err), kConverged) << err.str();
    const auto rows = lines(slurp(cfg.out + "_alpha.csv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], "alpha,iters,erres");

    mare::TransportSpec spec;
    spec.n = 10;
    const auto p = mare::gen_transport(spec);
    mare::StopCriteria c;
    c.tolerance = 1e-13;
    c.max_iterations = 100;
    c.kernel_row_cap = cfg.solve.kernel_cap;
    const auto rep = mare::DaddaSolver(p).solve(c);
    const auto cells = split(rows[1]);
    EXPECT_EQ(std::stod(cells[0]), mare::default_shifts(p).alpha);
    EXPECT_EQ(std::stoul(cells[1]), rep.iterations);
    EXPECT_EQ(lines(slurp(cfg.out + "_beta.csv")).size(), 2u);
}

TEST(Cli, VerifyPassesAndDetectsInjectedFault)
{
    VerifyConfig cfg;
    std::ostringstream out;
    std::ostringstream err;
    EXPECT_EQ(cmd_verify(cfg, out, err), kConverged) << out.str() << err.str();
    const auto ok = mare::Json::parse(out.str());
    EXPECT_GT(ok["checks"].get<int>(), 0);
    EXPECT_EQ(ok["failed"], 0);

    cfg.fault = Fault::SignFlip;
    std::ostringstream bad;
    EXPECT_EQ(cmd_verify(cfg, bad, err), kVerifyFailure);
    const auto j = mare::Json::parse(bad.str());
    ASSERT_GT(j["failures"].size(), 0u);
    EXPECT_EQ(j["failures"][0]["check"], "kernel_image_nonnegative");
}

TEST(Cli, VerifyFluidFamilyWithSizes)
{
    VerifyConfig cfg;
    cfg.family = "fluid";
    cfg.sizes = "2x18,90x10";
    std::ostringstream out;
    std::ostringstream err;
    EXPECT_EQ(cmd_verify(cfg, out, err), kConverged) << out.str();
    VerifyConfig bad = cfg;
    bad.family = "nope";
    EXPECT_EQ(cmd_verify(bad, out, err), kInputError);
}

TEST(Cli, SizeParsing)
{
    EXPECT_EQ(parse_pair_sizes("2x18,90x10").size(), 2u);
    EXPECT_THROW(parse_pair_sizes("2-18"), mare::InvalidArgument);
    EXPECT_EQ(parse_sizes("10,20,40"), (std::vector<std::size_t>{10, 20, 40}));
    EXPECT_THROW(parse_sizes("ten"), mare::InvalidArgument);
}
