#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <hmlab/cli.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
    int code;
    std::string out, err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "hmlab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = hmlab::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::path(HMLAB_TEST_TMP) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const json& j) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump();
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST(Cli, VerifyWritesAPassingReport) {
    const fs::path d = scratch("verify");
    const CliRun r = run({"verify", "--out", d.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    const json j = read_json(d / "verify.json");
    EXPECT_TRUE(j["passed"].get<bool>());
    EXPECT_EQ(j["suites"].size(), 7u);
    EXPECT_NE(r.out.find("PASS cybe"), std::string::npos);
}

TEST(Cli, VerifyIsDeterministic) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    ASSERT_EQ(run({"verify", "--seed", "42", "--out", a.string()}).code, 0);
    ASSERT_EQ(run({"verify", "--seed", "42", "--out", b.string()}).code, 0);
    EXPECT_EQ(slurp(a / "verify.json"), slurp(b / "verify.json"));
}

TEST(Cli, PerturbedRMatrixFailsAndNamesSuites) {
    const fs::path d = scratch("perturbed");
    const fs::path cfg = write_config(d, {{"test_hooks", {{"perturb_r_matrix", true}}}});
    const CliRun r = run({"verify", "--config", cfg.string(), "--out", d.string()});
    EXPECT_EQ(r.code, 1);
    for (const char* s : {"cybe", "reflection", "push_through"}) EXPECT_NE(r.err.find(s), std::string::npos) << s;
    EXPECT_EQ(r.err.find("jacobi"), std::string::npos);
    EXPECT_FALSE(read_json(d / "verify.json")["passed"].get<bool>());
}

TEST(Cli, OnlyRunsOneSuite) {
    const fs::path d = scratch("only");
    const CliRun r = run({"verify", "--only", "canonical", "--out", d.string()});
    EXPECT_EQ(r.code, 0);
    const json j = read_json(d / "verify.json");
    ASSERT_EQ(j["suites"].size(), 1u);
    EXPECT_EQ(j["suites"][0]["suite"], "canonical");
    EXPECT_EQ(run({"verify", "--only", "nonsense", "--out", d.string()}).code, 2);
    EXPECT_EQ(run({"scan", "--only", "cybe", "--out", d.string()}).code, 2);
}

TEST(Cli, UnknownConfigKeysAreRejectedAtEveryLevel) {
    const fs::path d = scratch("unknown");
    for (const json& bad : {json{{"sed", 1}}, json{{"grid", {{"npoints", 8}}}}, json{{"data", {{"kind", "twist"}, {"amp", 1}}}},
                            json{{"test_hooks", {{"perturb", true}}}}, json{{"boundary", {{"plus", {{"a", 1}}}, {"minus", json::object()}}}}}) {
        const CliRun r = run({"verify", "--config", write_config(d, bad).string(), "--out", d.string()});
        EXPECT_EQ(r.code, 2) << bad.dump();
        EXPECT_NE(r.err.find("unknown config key"), std::string::npos) << r.err;
    }
}

TEST(Cli, ConfigValuesAreValidated) {
    using hmlab::cli::ConfigError;
    using hmlab::cli::parse_config;
    EXPECT_THROW(parse_config({{"grid", {{"n_points", 4}}}}), ConfigError);
    EXPECT_THROW(parse_config({{"c", "one"}}), ConfigError);
    EXPECT_THROW(parse_config({{"c", 0.0}}), ConfigError);
    EXPECT_THROW(parse_config({{"flow", "sideways"}}), ConfigError);
    EXPECT_THROW(parse_config({{"charges", {{"k_max", 9}}}}), ConfigError);
    EXPECT_THROW(parse_config({{"suites", {"cybe", "nope"}}}), ConfigError);
    EXPECT_THROW(parse_config({{"command", "launch"}}), ConfigError);
    const auto cfg = parse_config({{"c", {0.8, 0.3}}, {"flow", "dual"}, {"scan", {{"lambdas", {1.0, {0.5, 0.5}}}}}});
    EXPECT_EQ(cfg.c, hmlab::cplx(0.8, 0.3));
    EXPECT_EQ(cfg.grid.axis, hmlab::Axis::time);
    ASSERT_EQ(cfg.lambdas.size(), 2u);
    EXPECT_EQ(cfg.lambdas[1], hmlab::cplx(0.5, 0.5));
}

TEST(Cli, FlagsOverrideTheConfig) {
    const fs::path d = scratch("override"), other = d / "elsewhere";
    const fs::path cfg = write_config(d, {{"seed", 5}, {"out", (d / "from_config").string()}, {"suites", {"jacobi"}}});
    ASSERT_EQ(run({"verify", "--config", cfg.string(), "--seed", "9", "--out", other.string()}).code, 0);
    EXPECT_EQ(read_json(other / "verify.json")["seed"], 9);
    EXPECT_FALSE(fs::exists(d / "from_config"));
}

TEST(Cli, CommandMismatchIsAnError) {
    const fs::path d = scratch("mismatch");
    const fs::path cfg = write_config(d, {{"command", "scan"}});
    EXPECT_EQ(run({"verify", "--config", cfg.string(), "--out", d.string()}).code, 2);
    EXPECT_EQ(run({"fly"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
}

TEST(Cli, SimulateWritesCheckpointsAndReport) {
    const fs::path d = scratch("simulate");
    const fs::path cfg = write_config(d, {{"grid", {{"n_points", 64}}}, {"evolution", {{"end", 0.05}, {"checkpoints", 2}}}});
    const CliRun r = run({"simulate", "--config", cfg.string(), "--out", d.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    const json j = read_json(d / "report.json");
    EXPECT_TRUE(j["passed"].get<bool>());
    EXPECT_EQ(j["checkpoint_times"].size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_TRUE(fs::exists(d / ("checkpoint_000" + std::to_string(i) + ".csv")));
    std::ifstream is(d / "checkpoint_0002.csv");
    const hmlab::SpinGrid back = hmlab::read_spin_csv(is, hmlab::cli::parse_config({{"grid", {{"n_points", 64}}}}).grid, 1.0);
    EXPECT_LT(back.casimir_deviation(), 1e-10);
}

TEST(Cli, SimulateFlagsBoundaryViolations) {
    const fs::path d = scratch("violation");
    const fs::path cfg = write_config(d, {{"grid", {{"n_points", 65}, {"boundary", "open"}}},
                                          {"evolution", {{"end", 0.01}}},
                                          {"boundary", {{"plus", {{"beta", 0.5}}}, {"minus", {{"gamma", 0.3}}}}}});
    const CliRun r = run({"simulate", "--config", cfg.string(), "--out", d.string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("boundary violation"), std::string::npos);
    EXPECT_TRUE(read_json(d / "report.json").contains("violation"));
}

TEST(Cli, ChargesAndScanWriteCsv) {
    const fs::path d = scratch("charges");
    ASSERT_EQ(run({"charges", "--out", d.string()}).code, 0);
    EXPECT_EQ(slurp(d / "charges_space.csv").substr(0, 9), "k,re,im\n-");
    const fs::path cfg = write_config(d, {{"flow", "dual"}, {"grid", {{"n_points", 64}}}, {"scan", {{"lambdas", {0.5, 1.0}}}}});
    ASSERT_EQ(run({"scan", "--config", cfg.string(), "--out", d.string()}).code, 0);
    const std::string csv = slurp(d / "scan_time.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "lambda_re,lambda_im,t_re,t_im");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    ASSERT_EQ(run({"charges", "--config", cfg.string(), "--out", d.string()}).code, 0);
    EXPECT_NE(slurp(d / "charges_time.csv").find("\n-2,"), std::string::npos);
}

TEST(Cli, ReportMergesAndIsIdempotent) {
    const fs::path d = scratch("report");
    EXPECT_EQ(run({"report", "--out", d.string()}).code, 2);
    EXPECT_EQ(run({"report", "--out", (d / "missing").string()}).code, 2);
    ASSERT_EQ(run({"verify", "--only", "jacobi", "--out", d.string()}).code, 0);
    const fs::path cfg = write_config(d, {{"grid", {{"n_points", 64}}}, {"evolution", {{"end", 0.02}}}});
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", d.string()}).code, 0);
    ASSERT_EQ(run({"report", "--out", d.string()}).code, 0);
    const std::string first = slurp(d / "summary.json");
    ASSERT_EQ(run({"report", "--out", d.string()}).code, 0);
    EXPECT_EQ(first, slurp(d / "summary.json"));
    const json s = json::parse(first);
    EXPECT_TRUE(s["passed"].get<bool>());
    EXPECT_EQ(s["inputs"].size(), 2u);
    EXPECT_TRUE(s["criteria"].contains("verify.jacobi.equal_time"));
    EXPECT_TRUE(s["criteria"].contains("simulate.casimir_drift"));
}

TEST(Cli, ReportFailsWhenAnInputFailed) {
    const fs::path d = scratch("report_fail");
    const fs::path cfg = write_config(d, {{"test_hooks", {{"perturb_r_matrix", true}}}, {"suites", {"cybe"}}});
    ASSERT_EQ(run({"verify", "--config", cfg.string(), "--out", d.string()}).code, 1);
    EXPECT_EQ(run({"report", "--out", d.string()}).code, 1);
    EXPECT_FALSE(read_json(d / "summary.json")["passed"].get<bool>());
}

TEST(Cli, BinaryPrintsHelp) {
    const std::string cmd = std::string(HMLAB_BINARY) + " --help > /dev/null";
    EXPECT_EQ(std::system(cmd.c_str()), 0);
}

TEST(Cli, DocumentedExampleConfigParses) {
    std::ifstream is(fs::path(HMLAB_SOURCE_DIR) / "tests" / "data" / "example_config.json");
    ASSERT_TRUE(is.good());
    const auto cfg = hmlab::cli::parse_config(json::parse(is));
    EXPECT_EQ(cfg.command, "simulate");
    ASSERT_TRUE(cfg.boundary.has_value());
    EXPECT_EQ(cfg.boundary->second.gamma, hmlab::cplx(-0.4));
    EXPECT_EQ(cfg.lambdas.size(), 2u);
    EXPECT_DOUBLE_EQ(cfg.tol("simulate.charge", 0.0), 1e-6);
}
