#include "mmf/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef MMF_DATA_DIR
#error "MMF_DATA_DIR must point at the data directory"
#endif

namespace fs = std::filesystem;
using mmf::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "mmf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = mmf::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(MMF_DATA_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "mmf_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

} // namespace

TEST(Cli, PriceClosedCall) {
    const auto out = scratch("price.json");
    const auto r = run({"price", "--model", data("two_step.json"), "--payoff", "call", "--strike", "30", "--method",
                        "closed", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const json rep = json::parse(slurp(out));
    EXPECT_EQ(rep["value"].get<double>(), 75.0);
    for (const char* key : {"payoff", "strike", "method", "value", "interval", "argmax_selection", "provenance"})
        EXPECT_TRUE(rep.contains(key)) << key;
    EXPECT_EQ(rep["interval"]["lower"].get<double>(), 70.0);
}

TEST(Cli, PriceGridAndExhaustive) {
    const auto out = scratch("grid.json");
    auto r = run({"price", "--model", data("two_step.json"), "--payoff", "call", "--strike", "30", "--method", "grid",
                  "--eps-range", "-12,12", "--grid-points", "49", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const json rep = json::parse(slurp(out));
    EXPECT_LE(rep["value"].get<double>(), 75.0);
    EXPECT_GE(rep["value"].get<double>(), 74.9);
    EXPECT_TRUE(rep.contains("gap_bound"));

    r = run({"price", "--model", data("two_step.json"), "--payoff", "put", "--strike", "90", "--method", "exhaustive"});
    EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, ReportsAreByteIdentical) {
    const auto a = scratch("a.json"), b = scratch("b.json");
    for (const auto& p : {a, b})
        ASSERT_EQ(run({"price", "--model", data("two_step.json"), "--payoff", "asian_put", "--strike", "60", "--method",
                       "grid", "--grid-points", "13", "--out", p.string()})
                      .code,
                  0);
    EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Cli, NumbersUseSeventeenDigits) {
    EXPECT_EQ(mmf::dump_report(json{{"x", 0.1}}, -1), "{\"x\":0.10000000000000001}\n");
}

TEST(Cli, Interval) {
    const auto r = run({"interval", "--model", data("two_step.json"), "--payoff", "put", "--strike", "50"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("[0, 25]"), std::string::npos) << r.out;
}

TEST(Cli, VerifyPasses) {
    const auto out = scratch("verify.json");
    const auto r = run({"verify", "--model", data("two_step.json"), "--alphas", "42", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.out << r.err;
    const json rep = json::parse(slurp(out));
    EXPECT_LE(rep["max_residual"].get<double>(), 1e-10);
    EXPECT_TRUE(rep["passed"].get<bool>());
}

TEST(Cli, EstimateWritesModelAndReport) {
    const auto model = scratch("est_model.json"), report = scratch("est_report.json");
    const auto r = run({"estimate", "--prices", data("sample.csv"), "--statistic", "constant_one", "--tau0", "1.0",
                        "--out", model.string(), "--report", report.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const json rep = json::parse(slurp(report));
    const auto a = rep["a"].get<std::vector<double>>();
    ASSERT_EQ(a.size(), 3u);
    EXPECT_NEAR(a[0], 0.2, 1e-15);
    EXPECT_EQ(a[1], 0.0);
    EXPECT_EQ(a[2], 0.0);

    // The estimated model feeds straight back into pricing.
    const auto priced = scratch("est_price.json");
    ASSERT_EQ(run({"price", "--model", model.string(), "--payoff", "call", "--strike", "100", "--out", priced.string()}).code, 0);
    EXPECT_NEAR(json::parse(slurp(priced))["value"].get<double>(), 20.0, 1e-12);
}

TEST(Cli, DecomposeSurfaceFile) {
    const auto surf = scratch("surface.json");
    // f = min(S, 100) on the two-step model: S_1 in {75, 150}, S_2 in {56.25, 112.5, 112.5, 225}.
    write(surf, R"({"floor": 1, "nodes": [
        {"history": [], "value": 100},
        {"history": [0], "value": 75}, {"history": [1], "value": 100},
        {"history": [0,0], "value": 56.25}, {"history": [0,1], "value": 100},
        {"history": [1,0], "value": 100}, {"history": [1,1], "value": 100}]})");
    const auto out = scratch("decomp.json");
    const auto r = run({"decompose", "--model", data("two_step.json"), "--surface", surf.string(), "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.out << r.err;
    const json rep = json::parse(slurp(out));
    ASSERT_EQ(rep["nodes"].size(), 3u);
    const auto& root = rep["nodes"][0];
    for (const char* key : {"history", "gamma", "atoms", "M"}) EXPECT_TRUE(root.contains(key)) << key;
    EXPECT_TRUE(rep["verification"]["passed"].get<bool>());

    write(surf, R"({"floor": 1, "nodes": [{"history": [], "value": 100}]})");
    const auto missing = run({"decompose", "--model", data("two_step.json"), "--surface", surf.string()});
    EXPECT_EQ(missing.code, 1);
    EXPECT_NE(missing.err.find("missing node"), std::string::npos) << missing.err;
}

TEST(Cli, OracleSubcommands) {
    EXPECT_EQ(run({"oracle", "sup", "--model", data("two_step.json"), "--strike", "30"}).code, 0);
    EXPECT_EQ(run({"oracle", "expectation", "--model", data("two_step.json"), "--strike", "30", "--seed", "3"}).code, 0);
    EXPECT_EQ(run({"oracle", "alpha", "--model", data("two_step.json")}).code, 0);
}

TEST(Cli, ErrorsAndExitCodes) {
    auto r = run({"price", "--model", data("two_step.json"), "--payoff", "call", "--strike", "30", "--bogus"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);

    r = run({"price", "--model", "/nonexistent.json", "--payoff", "call", "--strike", "30"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("/nonexistent.json"), std::string::npos);

    const auto bad = scratch("bad_model.json");
    write(bad, R"({"s0": 100, "extra": 1, "steps": []})");
    r = run({"verify", "--model", bad.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("unknown field \"extra\""), std::string::npos) << r.err;

    // 4^12 paths exceed the 10^7 cap.
    json big = {{"s0", 1.0}, {"steps", json::array()}};
    for (int i = 0; i < 12; ++i)
        big["steps"].push_back({{"a", 0.5},
                                {"vol", {{"kind", "constant"}, {"sigma", 1.0}}},
                                {"shocks", {{{"eps", -1.0}, {"prob", 0.25}}, {{"eps", -0.5}, {"prob", 0.25}},
                                            {{"eps", 0.5}, {"prob", 0.25}}, {{"eps", 1.0}, {"prob", 0.25}}}}});
    const auto huge = scratch("huge.json");
    write(huge, big.dump());
    r = run({"verify", "--model", huge.string()});
    EXPECT_EQ(r.code, 2) << r.err;
}
