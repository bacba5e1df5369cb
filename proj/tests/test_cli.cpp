#include <filesystem>
#include <fstream>
#include <gtest/gtest.h>
#include <regex>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("tlsnoise_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Run run(const std::string& args) {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path() / "tlsnoise_cli_io";
    fs::create_directories(dir);
    const auto out = dir / ("out" + std::to_string(counter));
    const auto err = dir / ("err" + std::to_string(counter));
    ++counter;
    const std::string cmd =
        std::string("\"") + TLSNOISE_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string config(const std::string& name) { return std::string(TLSNOISE_CONFIG_DIR) + "/" + name; }

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Exactly one error line, last on stderr: error[<code>]: <detail>
void expect_error_line(const Run& r, const std::string& code) {
    static const std::regex line(R"(^error\[([a-z-]+)\]: .+$)");
    std::istringstream in(r.err);
    std::string l, last;
    int errors = 0;
    while (std::getline(in, l)) {
        if (l.rfind("error", 0) == 0) ++errors;
        last = l;
    }
    EXPECT_EQ(errors, 1) << r.err;
    ASSERT_FALSE(r.err.empty());
    EXPECT_EQ(r.err.back(), '\n');
    std::smatch m;
    ASSERT_TRUE(std::regex_match(last, m, line)) << "stderr: " << r.err;
    EXPECT_EQ(m[1].str(), code) << r.err;
}

} // namespace

TEST(Cli, HelpExitsZero) {
    const auto r = run("--help");
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("simulate"), std::string::npos);
}

TEST(Cli, MissingSubcommandIsInvalidInput) {
    const auto r = run("");
    EXPECT_EQ(r.status, 2);
    expect_error_line(r, "invalid-input");
}

TEST(Cli, UnknownFlagIsInvalidInput) {
    const auto r = run("--bogus simulate");
    EXPECT_EQ(r.status, 2);
    expect_error_line(r, "invalid-input");
}

TEST(Cli, MissingInputFileIsIoFailure) {
    const auto dir = scratch("missing");
    const auto r = run("--out \"" + dir.string() + "\" analyze \"" + (dir / "nope.csv").string() + "\"");
    EXPECT_EQ(r.status, 4);
    expect_error_line(r, "io-failure");
}

TEST(Cli, MalformedCsvNamesFileLineColumn) {
    const auto dir = scratch("malformed");
    write(dir / "s.csv", "time_s,value,unit\n0,1,hertz\n10,1e,hertz\n");
    const auto r = run("--out \"" + dir.string() + "\" analyze \"" + (dir / "s.csv").string() + "\"");
    EXPECT_EQ(r.status, 2);
    expect_error_line(r, "invalid-input");
    EXPECT_NE(r.err.find("s.csv:3:4"), std::string::npos) << r.err;
}

TEST(Cli, SchemaVersionMismatch) {
    const auto dir = scratch("schema");
    write(dir / "c.json", R"({"schema_version": 99, "seed": 1})");
    const auto r = run("--config \"" + (dir / "c.json").string() + "\" --out \"" + dir.string() + "\" simulate");
    EXPECT_EQ(r.status, 2);
    expect_error_line(r, "invalid-input");
    EXPECT_NE(r.err.find("schema_version 99"), std::string::npos) << r.err;
}

TEST(Cli, UnknownConfigKey) {
    const auto dir = scratch("unknown_key");
    write(dir / "c.json", R"({"schema_version": 1, "estimator": {"windw": "hann"}})");
    const auto r = run("--config \"" + (dir / "c.json").string() + "\" --out \"" + dir.string() + "\" simulate");
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.err.find("estimator: unknown key 'windw'"), std::string::npos) << r.err;
}

TEST(Cli, NumericalFailure) {
    const auto dir = scratch("numerical");
    write(dir / "c.json",
          R"({"schema_version": 1, "protocols": {"shots": 1000, "spinlock_delays": {"start": 0, "stop": 1e-9, "count": 20}}})");
    const auto r = run("--config \"" + (dir / "c.json").string() + "\" --out \"" + dir.string() + "\" spinlock");
    EXPECT_EQ(r.status, 3);
    expect_error_line(r, "numerical-failure");
}

TEST(Cli, OverwriteNeedsForce) {
    const auto dir = scratch("force");
    const std::string base = "--scenario resonator-q --quiet --out \"" + dir.string() + "\" ";
    EXPECT_EQ(run(base + "simulate").status, 0);
    const auto again = run(base + "simulate");
    EXPECT_EQ(again.status, 4);
    expect_error_line(again, "io-failure");
    EXPECT_NE(again.err.find("--force"), std::string::npos);
    EXPECT_EQ(run(base + "--force simulate").status, 0);
}

TEST(Cli, QuietSuccessIsSilent) {
    const auto dir = scratch("quiet");
    const auto r = run("--scenario resonator-q --quiet --out \"" + dir.string() + "\" simulate");
    EXPECT_EQ(r.status, 0);
    EXPECT_TRUE(r.out.empty());
    EXPECT_TRUE(r.err.empty());
}

TEST(Cli, ConflictingConfigSources) {
    const auto r = run("--config \"" + config("sample-a-t1.json") + "\" --scenario resonator-q simulate");
    EXPECT_EQ(r.status, 2);
    expect_error_line(r, "invalid-input");
}

TEST(Cli, FullPipelineFromConfig) {
    const auto dir = scratch("pipeline");
    const std::string base = "--config \"" + config("resonator-q.json") + "\" --quiet --out \"" + dir.string() + "\" ";
    ASSERT_EQ(run(base + "simulate").status, 0);
    ASSERT_EQ(run(base + "analyze \"" + (dir / "series.csv").string() + "\"").status, 0);
    ASSERT_EQ(run(base + "fit \"" + dir.string() + "\"").status, 0);
    ASSERT_EQ(run(base + "spinlock").status, 0);
    ASSERT_EQ(run("--quiet report \"" + dir.string() + "\"").status, 0);
    const auto report = slurp(dir / "fit_report.json");
    EXPECT_NE(report.find("\"classification\": \"single-fluctuator-dominated\""), std::string::npos);
    EXPECT_NE(report.find("\"schema_version\": 1"), std::string::npos);
    for (const char* f : {"series.svg", "psd.svg", "allan.svg", "spinlock.svg", "summary.md"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(Cli, SeedOverrideChangesData) {
    const auto a = scratch("seed_a"), b = scratch("seed_b");
    ASSERT_EQ(run("--scenario resonator-q --quiet --seed 1 --out \"" + a.string() + "\" simulate").status, 0);
    ASSERT_EQ(run("--scenario resonator-q --quiet --seed 2 --out \"" + b.string() + "\" simulate").status, 0);
    const auto sa = slurp(a / "series.csv"), sb = slurp(b / "series.csv");
    EXPECT_NE(sa, sb);
    EXPECT_NE(sa.find("# seed: 1\n"), std::string::npos);
    EXPECT_NE(sb.find("# seed: 2\n"), std::string::npos);
}

TEST(Cli, DeterministicAcrossRunsAndThreads) {
    const auto a = scratch("det_a"), b = scratch("det_b");
    const std::string cfg = "--config \"" + config("sample-b-frequency.json") + "\" --quiet ";
    for (const auto& [dir, threads] : {std::pair{a, 1}, std::pair{b, 4}}) {
        const std::string base = cfg + "--threads " + std::to_string(threads) + " --out \"" + dir.string() + "\" ";
        ASSERT_EQ(run(base + "simulate").status, 0);
        ASSERT_EQ(run(base + "analyze \"" + (dir / "series.csv").string() + "\"").status, 0);
        ASSERT_EQ(run(base + "spinlock").status, 0);
    }
    for (const char* f : {"series.csv", "relaxation.csv", "ramsey.csv", "psd.csv", "allan.csv", "gamma.csv",
                          "spinlock_psd.csv", "spinlock_report.json"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}
