#include "mti/cli.hpp"
#include "mti/io.hpp"
#include "mti/solver.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace mti;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = MTI_FIXTURE_DIR;

struct CmdResult {
    int code;
    std::string out;
    std::string err;
    json doc() const { return json::parse(out); }
};

CmdResult run(std::vector<std::string> args) {
    args.insert(args.begin(), "mti");
    std::ostringstream out, err;
    const int code = runCommand(args, out, err);
    return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) { return kFixtures + "/" + name; }

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("mti_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    fs::path dir;
};

}  // namespace

TEST_F(CliTest, SolveFigureTwo) {
    CmdResult r = run({"solve", "--config", fixture("fig2.cfg"), "--out", path("strat.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    Strategy s = loadStrategyCsv(path("strat.csv"));
    EXPECT_EQ(s.size(), 11);
    EXPECT_EQ(s.dimension(), 2);
    EXPECT_GT(s.trades.col(1).maxCoeff(), 0);
    EXPECT_LT(s.trades.col(1).minCoeff(), 0);
    EXPECT_NEAR(s.trades.col(1).sum(), -1.0, 1e-10);
    EXPECT_NEAR(s.trades.col(0).sum(), 50.0, 1e-10);
    json d = r.doc();
    EXPECT_TRUE(d["unique"].get<bool>());
    EXPECT_EQ(d["solver"], "commuting");
    EXPECT_EQ(d["cross_check"]["solver"], "kkt");
    EXPECT_EQ(d["lambda"].size(), 2u);
    EXPECT_LE(d["residual"].get<double>(), 1e-8);
    std::string header = readFile(path("strat.csv")).substr(0, 18);
    EXPECT_EQ(header, "t,asset_1,asset_2\n");
}

TEST_F(CliTest, CheckPermanentIndefinite) {
    CmdResult r = run({"check", "--config", fixture("permanent_indefinite.cfg")});
    ASSERT_EQ(r.code, 0) << r.err;
    json d = r.doc();
    EXPECT_EQ(d["posdef"]["verdict"], "NotPD");
    EXPECT_EQ(d["posdef"]["witness"]["N"], 1);
    EXPECT_LT(d["posdef"]["witness"]["quadratic_form"].get<double>(), 0);
    EXPECT_EQ(d["properties"]["nonnegative"]["verdict"], "false");
}

TEST_F(CliTest, GramGaussianStrict) {
    CmdResult r = run({"gram", "--config", fixture("gaussian1d.cfg")});
    ASSERT_EQ(r.code, 0) << r.err;
    json d = r.doc();
    EXPECT_TRUE(d["strict"].get<bool>());
    EXPECT_TRUE(d["psd"].get<bool>());
    ASSERT_EQ(d["eigenvalues"].size(), 3u);
    double prev = -1;
    for (const json& e : d["eigenvalues"]) {
        EXPECT_GE(e.get<double>(), 0);
        EXPECT_GE(e.get<double>(), prev);
        prev = e.get<double>();
    }
}

TEST_F(CliTest, ConfigErrorsNameLocation) {
    CmdResult r = run({"solve", "--config", fixture("malformed.cfg")});
    EXPECT_EQ(r.code, kExitConfig);
    EXPECT_NE(r.err.find("line 5"), std::string::npos) << r.err;
    CmdResult f = run({"solve", "--config", fixture("bad_field.cfg")});
    EXPECT_EQ(f.code, kExitConfig);
    EXPECT_NE(f.err.find("kernel.B[1][1]"), std::string::npos) << f.err;
    CmdResult missing = run({"solve", "--config", path("nope.cfg")});
    EXPECT_EQ(missing.code, kExitConfig);
}

TEST_F(CliTest, NotPdSolveCarriesDirection) {
    CmdResult r = run({"solve", "--config", fixture("permanent_indefinite.cfg")});
    EXPECT_EQ(r.code, kExitNotPd);
    json e = json::parse(r.err);
    EXPECT_LT(e["eigenvalue"].get<double>(), 0);
    EXPECT_EQ(e["direction"]["trades"].size(), 3u);
}

TEST_F(CliTest, RoundTripThroughSimulate) {
    CmdResult s = run({"solve", "--config", fixture("fig2.cfg"), "--out", path("strat.csv")});
    ASSERT_EQ(s.code, 0) << s.err;
    CmdResult m = run({"simulate", "--config", fixture("fig2.cfg"), "--strategy", path("strat.csv"), "--paths", "2000"});
    ASSERT_EQ(m.code, 0) << m.err;
    const double c = s.doc()["cost"].get<double>();
    EXPECT_NEAR(m.doc()["analytic_cost"].get<double>(), c, 1e-10 * (1 + std::abs(c)));
}

TEST_F(CliTest, Determinism) {
    for (const std::vector<std::string>& args :
         {std::vector<std::string>{"simulate", "--config", fixture("fig2.cfg"), "--paths", "3000", "--seed", "5"},
          std::vector<std::string>{"check", "--config", fixture("fig2.cfg"), "--seed", "3"},
          std::vector<std::string>{"refine", "--config", fixture("matrix_exp.cfg"), "--levels", "4", "--format", "csv"}}) {
        CmdResult a = run(args), b = run(args);
        EXPECT_EQ(a.code, 0) << a.err;
        EXPECT_EQ(a.out, b.out);
    }
    CmdResult a = run({"solve", "--config", fixture("fig2.cfg"), "--out", path("a.csv")});
    CmdResult b = run({"solve", "--config", fixture("fig2.cfg"), "--out", path("b.csv")});
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(readFile(path("a.csv")), readFile(path("b.csv")));
}

TEST_F(CliTest, RefineReportsMonotoneLevels) {
    CmdResult r = run({"refine", "--config", fixture("matrix_exp.cfg"), "--levels", "5", "--out", path("fine.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    json d = r.doc();
    ASSERT_EQ(d["levels"].size(), 5u);
    EXPECT_TRUE(d["monotone"].get<bool>());
    EXPECT_EQ(loadStrategyCsv(path("fine.csv")).size(), 33);
}

TEST_F(CliTest, FiguresWritesTables) {
    CmdResult r = run({"figures", "--out", path("figs")});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"fig1_sweep.csv", "fig1_best_strategy.csv", "fig2_strategy.csv"})
        EXPECT_TRUE(fs::exists(dir / "figs" / f)) << f;
    json d = r.doc();
    EXPECT_GT(d["figure1"]["best"]["ratio"].get<double>(), 100);
    EXPECT_GE(d["figure2"]["asset2_sign_changes"].get<int>(), 1);
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run({}).code, kExitConfig);
    EXPECT_EQ(run({"bogus"}).code, kExitConfig);
    EXPECT_EQ(run({"solve"}).code, kExitConfig);
    EXPECT_EQ(run({"check", "--config", fixture("fig2.cfg"), "--format", "xml"}).code, kExitConfig);
    CmdResult sim = run({"simulate", "--config", fixture("permanent_indefinite.cfg")});
    EXPECT_EQ(sim.code, kExitConfig);
}

TEST_F(CliTest, CsvFormatFlattens) {
    CmdResult r = run({"gram", "--config", fixture("gaussian1d.cfg"), "--format", "csv"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("key,value\n", 0), 0u);
    EXPECT_NE(r.out.find("eigenvalues[2],"), std::string::npos);
    EXPECT_NE(r.out.find("strict,true"), std::string::npos);
}

TEST(ConfigIo, KernelJsonRoundTrip) {
    std::vector<std::string> docs{
        R"({"family":"plus_temporary","H0":[[1,0],[0,1]],"inner":{"family":"congruence","L":[[1,2],[0,1]],"inner":{"family":"cross_exp","kappa":1,"kappa_tilde":2,"rho":0.3}}})",
        R"({"family":"diag_congruence","O":[[0,1],[1,0]],"decays":[{"type":"exp_decay","rate":2},{"type":"power_capped","exponent":1.5,"cap":3}]})",
        R"({"family":"scalar_times_matrix","function":{"type":"linear_polya","lambda":1,"slope":0.5},"L":[[2,1],[1,2]]})",
        R"({"family":"jordan_exp","b":0.4})"};
    for (const std::string& text : docs) {
        DecayKernel k = kernelFromJson(json::parse(text));
        DecayKernel k2 = kernelFromJson(kernelToJson(k));
        for (double t : {0.0, 0.3, 2.0}) EXPECT_EQ(k.eval(t), k2.eval(t)) << text;
    }
}

TEST(ConfigIo, StrategyCsvRoundTripIsExact) {
    TimeGrid g({0.0, 0.1, 1.0 / 3.0});
    Matrix t(3, 2);
    t << 1.0 / 3.0, -2e-17, 1e300, -0.1, 7, std::nextafter(1.0, 2.0);
    Strategy s = strategyFromCsv(strategyToCsv(Strategy{g, t}));
    EXPECT_EQ(s.trades, t);
    EXPECT_EQ(s.grid.times(), g.times());
}

TEST(ConfigIo, GridVariantsAndConsistency) {
    ModelConfig c = parseConfig(R"({"kernel":{"family":"matrix_exp","B":[[1]]},
        "grid":{"horizon":2,"count":5,"spacing":"geometric","ratio":1.5},"portfolio":[1]})");
    EXPECT_EQ(c.grid.size(), 5);
    EXPECT_DOUBLE_EQ(c.grid.horizon(), 2.0);
    EXPECT_FALSE(c.grid.isEquidistant());
    EXPECT_THROW(parseConfig(R"({"kernel":{"family":"matrix_exp","B":[[1]]},"grid":{"times":[0,1]},"portfolio":[1,2]})"),
                 ConfigError);
    EXPECT_THROW(parseConfig(R"({"kernel":{"family":"matrix_exp","B":[[1]]},"grid":{"times":[0.5,1]},"portfolio":[1]})"),
                 ConfigError);
    EXPECT_THROW(parseConfig(R"({"kernel":{"family":"warp"},"grid":{"times":[0]},"portfolio":[1]})"), ConfigError);
}
