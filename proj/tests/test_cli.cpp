#include "pads/files.hpp"
#include "pads/metrics.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const std::string kCli = PADS_CLI_PATH;
const std::string kData = PADS_DATA_DIR;

fs::path work(const std::string& name) {
    const fs::path p = fs::path(PADS_WORK_DIR) / "cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return pads::read_file(p.string()); }

std::size_t lines(const fs::path& p) {
    std::ifstream is(p);
    std::size_t n = 0;
    for (std::string s; std::getline(is, s);) ++n;
    return n;
}

std::size_t trace_epochs(const fs::path& p) {
    std::ifstream is(p);
    std::size_t n = 0;
    for (std::string s; std::getline(is, s);) n += s.find("\"k\":\"truth\"") != std::string::npos;
    return n;
}

} // namespace

TEST(Cli, PrintDefaultsIsAValidConfig) {
    const auto dir = work("defaults");
    const auto cfg = dir / "defaults.json";
    ASSERT_EQ(std::system((kCli + " --print-defaults > " + cfg.string()).c_str()), 0);
    const auto j = nlohmann::json::parse(slurp(cfg));
    EXPECT_TRUE(j.contains("simulation"));
    EXPECT_TRUE(j.contains("detection"));
    // The printed defaults must be accepted back verbatim.
    EXPECT_EQ(run("detect --trace " + kData + "/example_trace.jsonl --method kf --config " + cfg.string() + " --out " +
                  (dir / "kf.csv").string()),
              0);
}

TEST(Cli, UsageAndConfigErrorsExitOne) {
    const auto dir = work("usage");
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("detect --trace " + kData + "/example_trace.jsonl --method pads-x --out " + (dir / "o.csv").string()), 1);
    EXPECT_EQ(run("detect --trace " + (dir / "missing.jsonl").string() + " --method kf --out " + (dir / "o.csv").string()), 1);
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << R"({"detection":{"windw":20}})";
    EXPECT_EQ(run("detect --trace " + kData + "/example_trace.jsonl --method kf --config " + bad.string() + " --out " +
                  (dir / "o.csv").string()),
              1);
    EXPECT_EQ(run("eval --outcomes " + bad.string() + " --gamma-grid 1:0:3 --out " + dir.string()), 1);
}

TEST(Cli, MalformedTraceExitsTwo) {
    const auto dir = work("malformed");
    const auto t = dir / "t.jsonl";
    std::ofstream(t) << "{\"k\":\"meta\",\"M\":1\n";
    EXPECT_EQ(run("detect --trace " + t.string() + " --method kf --out " + (dir / "o.csv").string()), 2);
    EXPECT_FALSE(fs::exists(dir / "o.csv"));
}

TEST(Cli, SopWithoutStationsIsUnsupported) {
    const auto dir = work("sop");
    EXPECT_EQ(run("detect --trace " + kData + "/example_trace.jsonl --method sop --out " + (dir / "o.csv").string()), 1);
}

TEST(Cli, SimulateWritesManifestWithSeeds) {
    const auto dir = work("simulate");
    ASSERT_EQ(run("simulate --config " + kData + "/example_config.json --out " + dir.string() + " --seed 77 --count 3"), 0);
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    ASSERT_EQ(m.at("traces").size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(m["traces"][i]["seed"].get<std::uint64_t>(), 77 + i);
        EXPECT_TRUE(fs::exists(dir / m["traces"][i]["file"].get<std::string>()));
    }
    EXPECT_EQ(m.at("config_hash").get<std::string>().size(), 16u);
    EXPECT_NE(slurp(dir / "trace_000.jsonl"), slurp(dir / "trace_001.jsonl"));
}

TEST(Cli, DetectWritesOneRowPerEpoch) {
    const auto dir = work("detect");
    const auto trace = fs::path(kData) / "example_trace.jsonl";
    const auto out = dir / "pads-a.csv";
    ASSERT_EQ(run("detect --trace " + trace.string() + " --method pads-a --out " + out.string()), 0);
    EXPECT_EQ(lines(out), trace_epochs(trace) + 1);
    std::ifstream is(out);
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, pads::kOutcomesHeader);
    const auto meta = nlohmann::json::parse(slurp(dir / "pads-a.csv.meta.json"));
    EXPECT_EQ(meta.at("method"), "pads-a");

    const auto again = dir / "again.csv";
    ASSERT_EQ(run("detect --trace " + trace.string() + " --method pads-a --out " + again.string()), 0);
    EXPECT_EQ(slurp(out), slurp(again));
}

TEST(Cli, SavedModelReproducesDetection) {
    const auto dir = work("model");
    const auto trace = (fs::path(kData) / "example_trace.jsonl").string();
    ASSERT_EQ(run("detect --trace " + trace + " --method pads-o --out " + (dir / "a.csv").string() + " --save-model " +
                  (dir / "m.json").string()),
              0);
    const auto model = nlohmann::json::parse(slurp(dir / "m.json"));
    EXPECT_TRUE(model.contains("version"));
    ASSERT_EQ(run("detect --trace " + trace + " --method pads-o --out " + (dir / "b.csv").string() + " --model " +
                  (dir / "m.json").string()),
              0);
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
}

TEST(Cli, EvalOnPerfectOutcomes) {
    const auto dir = work("eval");
    std::vector<pads::Outcome> v;
    for (int k = 0; k < 40; ++k) {
        pads::Outcome o;
        o.t = k;
        o.truth = k >= 20;
        o.decision = o.truth;
        o.score = o.truth ? 10.0 : 1.0;
        o.recovered = o.truth_pos = {1.0 * k, 0.0};
        v.push_back(o);
    }
    std::ostringstream os;
    pads::write_outcomes(os, v);
    pads::atomic_write((dir / "perfect.csv").string(), os.str());
    ASSERT_EQ(run("eval --outcomes " + (dir / "perfect.csv").string() + " --gamma-grid 0:12:13 --out " +
                  (dir / "eval").string()),
              0);
    std::ifstream roc(dir / "eval" / "roc.csv");
    std::string line;
    std::getline(roc, line);
    EXPECT_EQ(line, "method,gamma,tpr,fpr,delay_mean,misses");
    bool top_left = false;
    while (std::getline(roc, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
        ASSERT_EQ(f.size(), 6u);
        EXPECT_EQ(f[0], "perfect");
        top_left |= std::stod(f[2]) == 1.0 && std::stod(f[3]) == 0.0;
    }
    EXPECT_TRUE(top_left);
    std::ifstream stats(dir / "eval" / "stats.csv");
    std::getline(stats, line);
    EXPECT_EQ(line.rfind("method,mean,median,best20,worst20", 0), 0u);
    EXPECT_TRUE(fs::exists(dir / "eval" / "sweep.csv"));
}
