#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
};

// Runs the CLI through the shell with stderr folded into the captured output.
Result run(const std::string& args, const std::string& env = "")
{
    const std::string cmd = env + " '" SSPDE_CLI_PATH "' " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p)
        return {-1, ""};
    std::string out;
    std::array<char, 4096> buf;
    while (auto n = std::fread(buf.data(), 1, buf.size(), p))
        out.append(buf.data(), n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliFiles : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path()
            / ("sspde_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string q(const fs::path& p) const { return "'" + p.string() + "'"; }
    fs::path dir;
};

} // namespace

TEST(Cli, PredictEkJson)
{
    const auto r = run("predict-ek --d 1 --L 3.14159 --eps 0.1");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["schema_version"], "sspde-1");
    const double v = j["value"];
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0);
    EXPECT_EQ(j["config"]["eps"], 0.1);
}

TEST(Cli, PredictEkSweep)
{
    const auto r = run("predict-ek --d 2 --L 1 --eps 0.2,0.1 --N 64");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["points"].size(), 2u);
    const double ratio = j["points"][1]["value"].get<double>() / j["points"][0]["value"].get<double>();
    EXPECT_NEAR(std::log(ratio), 0.25 * (10 - 5), 1e-9);
}

TEST(Cli, RegstructListHasSixteenRows)
{
    const auto r = run("regstruct --list");
    ASSERT_EQ(r.code, 0) << r.out;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# schema_version=sspde-1");
    int rows = 0;
    bool saw_xi = false, saw_rsv_x = false;
    while (std::getline(in, line)) {
        ++rows;
        saw_xi |= line.rfind("X_i ", 0) == 0;
        saw_rsv_x |= line.rfind("RSV*X_i ", 0) == 0;
    }
    EXPECT_EQ(rows, 16);
    EXPECT_TRUE(saw_xi);
    EXPECT_TRUE(saw_rsv_x);
}

TEST(Cli, RegstructCoproductAndRenorm)
{
    const auto c = run("regstruct --coproduct RSVV");
    ASSERT_EQ(c.code, 0) << c.out;
    EXPECT_NE(c.out.find("1 RSVV (x) 1"), std::string::npos);
    EXPECT_NE(c.out.find("1 RSI (x) J0(RSV)"), std::string::npos);
    const auto m = run("regstruct --renorm RSWW");
    ASSERT_EQ(m.code, 0) << m.out;
    EXPECT_NE(m.out.find("(-3*c2) RSI"), std::string::npos);
    EXPECT_NE(m.out.find("(1) RSWW"), std::string::npos);
    EXPECT_EQ(run("regstruct --coproduct 'I(Xi'").code, 1);
    EXPECT_EQ(run("regstruct").code, 1);
}

TEST(Cli, MissingRequiredFlagExitsOneWithUsage)
{
    const auto r = run("predict-ek --d 1 --eps 0.1");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("--L is required"), std::string::npos);
    EXPECT_NE(r.out.find("Usage:"), std::string::npos);
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("no-such-command").code, 1);
}

TEST(Cli, DomainErrorExitsOne)
{
    const auto r = run("predict-ek --d 1 --L 7 --eps 0.1");
    EXPECT_EQ(r.code, 1) << r.out;
    EXPECT_NE(r.out.find("Usage:"), std::string::npos);
}

TEST_F(CliFiles, NumericalAbortExitsTwo)
{
    const auto r = run("simulate-spde --eps 50 --dt 5 --N 4 --runs 1 --out " + q(dir));
    EXPECT_EQ(r.code, 2) << r.out;
    EXPECT_NE(r.out.find("numerical abort"), std::string::npos);
}

TEST_F(CliFiles, SameSeedGivesIdenticalCsv)
{
    const std::string base = "simulate-lattice --N 2 --eps 0.4 --dt 0.01 --runs 30 --seed 11";
    ASSERT_EQ(run(base + " --workers 1 --out " + q(dir / "a")).code, 0);
    ASSERT_EQ(run(base + " --workers 3 --out " + q(dir / "b")).code, 0);
    const std::string a = slurp(dir / "a" / "lattice_N2_eps0p4.csv");
    EXPECT_EQ(a.rfind("# schema_version=sspde-1\n", 0), 0u);
    EXPECT_EQ(a, slurp(dir / "b" / "lattice_N2_eps0p4.csv"));
    ASSERT_EQ(run("simulate-lattice --N 2 --eps 0.4 --dt 0.01 --runs 30 --seed 12 --out " + q(dir / "c")).code, 0);
    EXPECT_NE(a, slurp(dir / "c" / "lattice_N2_eps0p4.csv"));
}

TEST_F(CliFiles, LatticeSweepEchoesConfig)
{
    const auto r = run("simulate-lattice --N 2,3 --eps 0.5,0.6 --dt 0.01 --runs 5 --out " + q(dir));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(slurp(dir / "lattice_summary.json"));
    EXPECT_EQ(j["schema_version"], "sspde-1");
    ASSERT_EQ(j["points"].size(), 4u);
    EXPECT_EQ(j["points"][3]["config"]["N"], 3);
    EXPECT_EQ(j["points"][3]["config"]["eps"], 0.6);
    EXPECT_EQ(j["points"][3]["replicas"], 5);
    EXPECT_TRUE(fs::exists(dir / "lattice_N3_eps0p6.csv"));
}

TEST_F(CliFiles, SpdeRunWritesCsvAndSummary)
{
    const auto r = run("simulate-spde --d 1 --L 1 --N 8 --eps 0.3 --dt 0.01 --runs 3 --out " + q(dir));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(slurp(dir / "spde_summary.json"));
    EXPECT_EQ(j["points"][0]["config"]["renormalize"], false);
    EXPECT_TRUE(j["points"][0].contains("ek_prediction"));
    EXPECT_EQ(slurp(dir / "spde_d1_N8_eps0p3.csv").rfind("# schema_version=sspde-1\n", 0), 0u);
}

TEST_F(CliFiles, ConfigSectionsAndFlagPrecedence)
{
    std::ofstream(dir / "run.ini") << "[markov]\nchain = unused\n[simulate-lattice]\nseed = 5\nruns = 4\ndt = 0.01\n";
    const auto r = run("--config " + q(dir / "run.ini") + " simulate-lattice --eps 0.5 --runs 2 --out " + q(dir));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(slurp(dir / "lattice_summary.json"));
    EXPECT_EQ(j["points"][0]["config"]["seed"], 5);
    EXPECT_EQ(j["points"][0]["config"]["runs"], 2);
    EXPECT_EQ(j["points"][0]["config"]["dt"], 0.01);
}

TEST_F(CliFiles, UnknownConfigKeyRejected)
{
    std::ofstream(dir / "bad.ini") << "[simulate-lattice]\nbogus = 3\n";
    const auto r = run("--config " + q(dir / "bad.ini") + " simulate-lattice --eps 0.5 --out " + q(dir));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("bogus"), std::string::npos);
}

TEST_F(CliFiles, OutputDirectoryFromEnvironment)
{
    const auto r = run("renorm-constants --d 2 --N 4,8", "SSPDE_OUTPUT_DIR=" + q(dir / "env"));
    ASSERT_EQ(r.code, 0) << r.out;
    const std::string csv = slurp(dir / "env" / "constants_d2.csv");
    EXPECT_EQ(csv.rfind("# schema_version=sspde-1\nname,d,N,L,mass_sq,value\n", 0), 0u);
    // An explicit flag beats the environment.
    ASSERT_EQ(run("renorm-constants --d 2 --N 4 --out " + q(dir / "flag"), "SSPDE_OUTPUT_DIR=" + q(dir / "env2")).code, 0);
    EXPECT_TRUE(fs::exists(dir / "flag" / "constants_d2.csv"));
    EXPECT_FALSE(fs::exists(dir / "env2"));
}

TEST_F(CliFiles, MarkovBoundsSandwichCapacity)
{
    // Birth-death chain on 4 states with uniform rates.
    std::ofstream(dir / "chain.txt") << "# path\n0 1 0.5\n1 0 0.5\n1 2 0.5\n2 1 0.5\n2 3 0.5\n3 2 0.5\n";
    const auto r = run("markov --chain " + q(dir / "chain.txt") + " --A 0 --B 3");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    const double cap = j["capacity"];
    EXPECT_NEAR(j["bounds"]["dirichlet"].get<double>(), cap, 1e-10);
    EXPECT_NEAR(j["bounds"]["thomson"].get<double>(), cap, 1e-10);
    const auto h = j["committor"].get<std::vector<double>>();
    ASSERT_EQ(h.size(), 4u);
    EXPECT_NEAR(h[1], 2.0 / 3.0, 1e-10);
    EXPECT_NEAR(h[2], 1.0 / 3.0, 1e-10);
    EXPECT_EQ(run("markov --chain " + q(dir / "missing.txt") + " --A 0 --B 3").code, 1);
}
