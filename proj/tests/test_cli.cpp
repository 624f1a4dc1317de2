#include "randbc/cli.hpp"
#include "randbc/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace randbc::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("randbc_test_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

int count_lines(const std::string& text) { return static_cast<int>(std::count(text.begin(), text.end(), '\n')); }

TEST(ParseConfig, MinimalFileFillsDefaults) {
    const auto cfg = parse_config("command = solve\ngrid.n = 65\n", {});
    EXPECT_EQ(cfg.command, "solve");
    EXPECT_EQ(cfg.integer("grid.n"), 65);
    EXPECT_EQ(cfg.seed, 1u);
    EXPECT_EQ(cfg.text("bc.family"), "gaussian");
    EXPECT_EQ(cfg.int_list("experiment.N_list"), (std::vector<int>{1, 2, 4, 8, 16}));
    EXPECT_EQ(cfg.values.size(), valid_keys().size());
}

TEST(ParseConfig, CommentsAndWhitespace) {
    const auto kv = parse_key_values("# header\n  command=runge   # trailing\n\nrunge.K = 9\n");
    EXPECT_EQ(kv.at("command"), "runge");
    EXPECT_EQ(kv.at("runge.K"), "9");
    EXPECT_THROW(parse_key_values("just text\n"), ConfigError);
}

TEST(ParseConfig, GridPrecondition) {
    EXPECT_THROW(parse_config("command = solve\ngrid.n = 4\n", {}), ConfigError);
}

TEST(ParseConfig, OverridesWin) {
    const auto cfg = parse_config("command = solve\nseed = 3\n", {{"seed", "7"}});
    EXPECT_EQ(cfg.seed, 7u);
}

TEST(ParseConfig, UnknownKeyListsValidKeys) {
    try {
        parse_config("command = solve\ngrid.m = 3\n", {});
        FAIL();
    } catch (const ConfigError& err) {
        const std::string msg = err.what();
        EXPECT_NE(msg.find("grid.m"), std::string::npos);
        EXPECT_NE(msg.find("grid.n"), std::string::npos);
    }
}

TEST(ParseConfig, TypeErrorsNameTheKey) {
    try {
        parse_config("command = solve\nexperiment.M = lots\n", {});
        FAIL();
    } catch (const ConfigError& err) {
        EXPECT_NE(std::string(err.what()).find("experiment.M"), std::string::npos) << err.what();
    }
    EXPECT_THROW(parse_config("command = dance\n", {}), ConfigError);
    EXPECT_THROW(parse_config("grid.n = 33\n", {}), ConfigError);
    EXPECT_THROW(parse_config("command = sample\nbc.family = cauchy\n", {}), ConfigError);
}

TEST(Execute, SuccessCurveRowCount) {
    const auto dir = scratch("curve");
    const auto cfg = parse_config("command = constraint-experiment\nexperiment.M = 200\n", {{"out_dir", dir.string()}});
    const auto res = execute(cfg);
    ASSERT_EQ(res.status, 0) << res.message;
    const std::string csv = slurp(dir / "success_curve.csv");
    EXPECT_EQ(count_lines(csv), 6);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "N,successes,M,rate,lo95,hi95,tau");
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
    fs::remove_all(dir);
}

TEST(Execute, ManifestRerunIsByteIdentical) {
    const auto first = scratch("first");
    const auto second = scratch("second");
    const auto cfg = parse_config("command = constraint-experiment\nzeta = jacobian\nexperiment.M = 60\n"
                                  "experiment.N_list = 1,2,4\nthreads = 1\n",
                                  {{"out_dir", first.string()}});
    ASSERT_EQ(execute(cfg).status, 0);
    auto again = config_from_manifest(first / "manifest.json", {{"out_dir", second.string()}, {"threads", "5"}});
    ASSERT_EQ(execute(again).status, 0);
    for (const char* f : {"success_curve.csv", "trials.csv", "constraint_field.csv"}) {
        EXPECT_EQ(slurp(first / f), slurp(second / f)) << f;
        EXPECT_EQ(sha256_file(first / f), sha256_file(second / f));
    }
    const std::string manifest = slurp(first / "manifest.json");
    EXPECT_NE(manifest.find("sha256:" + sha256_file(first / "success_curve.csv")), std::string::npos);
    fs::remove_all(first);
    fs::remove_all(second);
}

TEST(Execute, DomainErrorRemovesPartialOutput) {
    const auto dir = scratch("domain");
    // Pole inside the disk is rejected as a precondition -> status 2, nothing left behind.
    const auto cfg = parse_config("command = runge\nrunge.pole = 0.5,0.5\n", {{"out_dir", dir.string()}});
    const auto res = execute(cfg);
    EXPECT_NE(res.status, 0);
    EXPECT_FALSE(fs::exists(dir / "runge.csv"));
    EXPECT_FALSE(fs::exists(dir / "manifest.json"));
    fs::remove_all(dir);
}

TEST(Execute, UnwritableOutputDirectory) {
    const auto dir = scratch("blocked");
    fs::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    const auto cfg = parse_config("command = solve\ngrid.n = 9\n", {{"out_dir", (dir / "file" / "sub").string()}});
    EXPECT_EQ(execute(cfg).status, 2);
    fs::remove_all(dir);
}

TEST(Sha256, KnownDigest) {
    const auto dir = scratch("sha");
    fs::create_directories(dir);
    std::ofstream(dir / "abc", std::ios::binary) << "abc";
    EXPECT_EQ(sha256_file(dir / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    fs::remove_all(dir);
}

} // namespace
} // namespace randbc::cli
