#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "halfstrip/json_io.hpp"

namespace {

struct CliRun {
    int status = -1;
    std::string out;
};

CliRun run(const std::string& args) {
    const std::string cmd = std::string(HALFSTRIP_CLI) + " " + args + " 2>/dev/null";
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf;
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string data(const std::string& name) { return std::string(HALFSTRIP_TEST_DATA) + "/" + name; }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "halfstrip_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(Cli, AnalyzeNullWalk) {
    const CliRun r = run("analyze " + data("crw_null.json"));
    ASSERT_EQ(r.status, 0);
    const auto rep = halfstrip::Json::parse(r.out);
    EXPECT_EQ(rep["classification"]["verdict"], "NullRecurrent");
    EXPECT_NEAR(rep["classification"]["U"].get<double>(), 0.5, 1e-9);
    EXPECT_NEAR(rep["classification"]["V"].get<double>(), 1.5, 1e-9);
    EXPECT_NEAR(rep["moments"]["theta_star"].get<double>(), 1.0 / 3, 1e-9);
    EXPECT_EQ(rep["provenance"]["version"], halfstrip::Json("0.1.0"));
}

TEST(Cli, AnalyzeTransientAndCoefficients) {
    const CliRun t = run("analyze " + data("crw_transient.json"));
    ASSERT_EQ(t.status, 0);
    EXPECT_EQ(halfstrip::Json::parse(t.out)["classification"]["verdict"], "Transient");
    const CliRun c = run("analyze " + data("crw_null_coefficients.json"));
    ASSERT_EQ(c.status, 0);
    EXPECT_EQ(halfstrip::Json::parse(c.out)["classification"]["U"], 0.5);
    // A nonzero mean drift is routed to the constant-drift classifier.
    const CliRun m = run("analyze " + data("crw_null_miscentered.json"));
    ASSERT_EQ(m.status, 0);
    EXPECT_EQ(halfstrip::Json::parse(m.out)["classification"]["verdict"], "Transient");
}

TEST(Cli, ErrorsAreNonzero) {
    const auto bad = scratch("bad.json");
    std::ofstream(bad) << "{not json";
    EXPECT_NE(run("analyze " + bad.string()).status, 0);
    EXPECT_NE(run("analyze --no-such-flag " + data("crw_null.json")).status, 0);
    EXPECT_NE(run("").status, 0);
}

TEST(Cli, AnalyzeIsRepeatable) {
    const CliRun a = run("analyze " + data("crw_null.json"));
    const CliRun b = run("analyze " + data("crw_null.json"));
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, FitOutputIsACoefficientsSpec) {
    const auto fit = scratch("fit.json");
    ASSERT_EQ(run("fit " + data("crw_null.json") + " --out " + fit.string()).status, 0);
    const CliRun r = run("analyze " + fit.string());
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(halfstrip::Json::parse(r.out)["classification"]["verdict"], "NullRecurrent");
}

TEST(Cli, SimulateEmptyAndDeterministic) {
    const CliRun empty = run("simulate --model " + data("crw_null.json") + " --start 50,+1 --level 10 --n 0");
    EXPECT_EQ(empty.status, 0);
    EXPECT_EQ(empty.out, "tau,censored,steps\n");

    const std::string args = "simulate --model " + data("crw_null.json") + " --start 50,+1 --level 10 --cap 20000 --n 200 --seed 9";
    const CliRun a = run(args), b = run(args), c = run(args + " --threads 8");
    ASSERT_EQ(a.status, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out, c.out);
    EXPECT_NE(a.out, run(args + " --seed 10").out);
}

TEST(Cli, SimulateJsonReport) {
    const auto js = scratch("sim.json");
    const CliRun r = run("simulate --model " + data("crw_null.json") +
                      " --start 50,+1 --level 10 --cap 20000 --n 100 --json " + js.string());
    ASSERT_EQ(r.status, 0);
    const auto rep = halfstrip::Json::parse(slurp(js));
    EXPECT_EQ(rep["n"], 100);
    EXPECT_TRUE(rep["tail"].contains("error"));  // fewer than 1000 uncensored samples
    EXPECT_EQ(rep["moments"].size(), 3u);
    EXPECT_NE(run("simulate --model " + data("crw_null.json") + " --start 50,up --level 10").status, 0);
}

TEST(Cli, VerifyPassesOnNullWalk) {
    const CliRun r = run("verify " + data("crw_null.json"));
    EXPECT_EQ(r.status, 0);
    const auto rep = halfstrip::Json::parse(r.out);
    EXPECT_EQ(rep["result"], "PASS");
    for (const auto& c : rep["checks"]) EXPECT_NE(c["status"], "FAIL") << c["name"];
}

TEST(Cli, VerifyFlagsMisassertedCoefficients) {
    const CliRun r = run("verify --no-sim --coeffs " + data("crw_null_miscentered.json") + " " + data("crw_null.json"));
    EXPECT_EQ(r.status, 3);
    const auto rep = halfstrip::Json::parse(r.out);
    bool saw = false;
    for (const auto& c : rep["checks"])
        if (c["name"] == "coefficients") {
            saw = true;
            EXPECT_EQ(c["status"], "FAIL");
        }
    EXPECT_TRUE(saw);
    EXPECT_EQ(run("verify --no-sim --coeffs " + data("crw_null_coefficients.json") + " " + data("crw_null.json")).status, 0);
}

TEST(Cli, LyapunovTableCsv) {
    const CliRun r = run("verify --lyapunov " + data("crw_null.json"));
    EXPECT_EQ(r.status, 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "nu,x,label,increment,leading,ratio");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3 * 7 * 2);
}

TEST(Cli, HelpListsFlags) {
    const CliRun r = run("--help");
    EXPECT_EQ(r.status, 0);
    for (const char* flag : {"--seed", "--out", "--tol", "--refined", "--threads"})
        EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
    const CliRun s = run("simulate --help");
    for (const char* flag : {"--model", "--start", "--level", "--cap", "--n"})
        EXPECT_NE(s.out.find(flag), std::string::npos) << flag;
}
