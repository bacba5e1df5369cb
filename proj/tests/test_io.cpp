#include <cmath>
#include <algorithm>
#include <filesystem>
#include <functional>
#include <gtest/gtest.h>
#include <sstream>
#include <string>
#include <vector>

#include "tlsnoise/io/commands.hpp"
#include "tlsnoise/io/config.hpp"
#include "tlsnoise/io/csv.hpp"
#include "tlsnoise/io/report.hpp"
#include "tlsnoise/io/svg.hpp"

using namespace tlsnoise;
using namespace tlsnoise::io;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("tlsnoise_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

const Provenance kProv{"0123456789abcdef", 17};

std::vector<double> awkward_values(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::sin(0.37 * static_cast<double>(i)) * std::pow(10.0, static_cast<double>(i % 7) - 3.0) / 3.0;
    return v;
}

std::string expect_invalid(const std::function<void()>& f) {
    try {
        f();
    } catch (const InvalidInput& e) {
        return e.what();
    }
    ADD_FAILURE() << "no InvalidInput thrown";
    return {};
}

Context quiet_context(const RunConfig& cfg, const fs::path& out) {
    Context ctx;
    ctx.config = cfg;
    ctx.out = out;
    ctx.quiet = true;
    return ctx;
}

} // namespace

TEST(CsvRoundTrip, SeriesIsBitExact) {
    const TimeSeries ts(awkward_values(200), 0.1, Unit::hertz, 3.3);
    const auto back = parse_series(parse_csv(series_csv(ts, kProv), "mem.csv", kSeriesHeader));
    ASSERT_EQ(back.size(), ts.size());
    EXPECT_EQ(back.dt(), ts.dt());
    EXPECT_EQ(back.start_time(), ts.start_time());
    EXPECT_EQ(back.unit(), Unit::hertz);
    for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_EQ(back[i], ts[i]);
}

TEST(CsvRoundTrip, SeriesWithoutDtCommentInfersGrid) {
    const std::string text = "time_s,value,unit\n0,1.5,seconds\n0.25,2.5,seconds\n0.5,-1,seconds\n";
    const auto ts = parse_series(parse_csv(text, "m.csv", kSeriesHeader));
    EXPECT_DOUBLE_EQ(ts.dt(), 0.25);
    EXPECT_EQ(ts.unit(), Unit::seconds);
    EXPECT_EQ(ts[2], -1.0);
}

TEST(CsvRoundTrip, FifteenDigitsSurvive) {
    const double x = 0.123456789012345;
    const TimeSeries ts({x, -x * 1e-300, x * 1e300}, 1.0);
    const auto back = parse_series(parse_csv(series_csv(ts, kProv), "m.csv", kSeriesHeader));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back[i] / ts[i], 1.0, 1e-15);
}

TEST(CsvRoundTrip, DecayCurve) {
    DecayCurve c;
    c.delays = {0.0, 1e-6, 2.5e-6, 7e-6};
    c.populations = {1.0, 0.8187307530779818, 0.6065306597126334, 0.2465969639416065};
    c.shots = 1000;
    const auto back = parse_decay(parse_csv(decay_csv(c, kProv), "m.csv", kDecayHeader));
    EXPECT_EQ(back.delays, c.delays);
    EXPECT_EQ(back.populations, c.populations);
    EXPECT_EQ(back.shots, 1000u);
}

TEST(CsvRoundTrip, IdealDecayCurveKeepsZeroShots) {
    DecayCurve c;
    c.delays = {0.0, 1.0};
    c.populations = {1.0, 0.5};
    const auto back = parse_decay(parse_csv(decay_csv(c, kProv), "m.csv", kDecayHeader));
    EXPECT_TRUE(back.ideal());
}

TEST(CsvRoundTrip, Spectrum) {
    std::vector<double> s = awkward_values(57);
    for (double& v : s) v = std::abs(v);
    const PowerSpectrum pos(logspace(1e-5, 0.05, 57), s);
    const auto back = parse_spectrum(parse_csv(spectrum_csv(pos, kProv), "m.csv", kSpectrumHeader));
    ASSERT_EQ(back.size(), pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
        EXPECT_EQ(back.frequencies()[i], pos.frequencies()[i]);
        EXPECT_EQ(back.psd()[i], pos.psd()[i]);
    }
}

TEST(CsvRoundTrip, Allan) {
    const AllanCurve a({10.0, 20.0, 40.0}, {1.0 / 3.0, 0.0, 2e-9}, {99, 49, 0});
    const auto back = parse_allan(parse_csv(allan_csv(a, kProv), "m.csv", kAllanHeader));
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back.taus()[i], a.taus()[i]);
        EXPECT_EQ(back.adev()[i], a.adev()[i]);
        EXPECT_EQ(back.counts()[i], a.counts()[i]);
    }
}

TEST(CsvRoundTrip, GammaTable) {
    const std::vector<SpinLockPoint> pts{{1e4, 12345.678901234567, 1.25}, {1e7, 8928.571428571428, 0.0}};
    const auto back = parse_gamma(parse_csv(gamma_csv(pts, kProv), "m.csv", kGammaHeader));
    ASSERT_EQ(back.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(back[i].rabi_frequency, pts[i].rabi_frequency);
        EXPECT_EQ(back[i].gamma, pts[i].gamma);
        EXPECT_EQ(back[i].gamma_err, pts[i].gamma_err);
    }
}

TEST(CsvRoundTrip, ProvenanceComments) {
    const auto t = parse_csv(spectrum_csv(PowerSpectrum({1.0}, {2.0}), kProv), "m.csv", kSpectrumHeader);
    const auto p = t.provenance();
    ASSERT_TRUE(p.has_value());
    EXPECT_EQ(p->config_hash, kProv.config_hash);
    EXPECT_EQ(p->seed, kProv.seed);
}

TEST(CsvErrors, BadNumberNamesLineAndColumn) {
    const std::string text = "# seed: 1\ntime_s,value,unit\n0,1,hertz\n10,x,hertz\n";
    const auto msg = expect_invalid([&] { parse_series(parse_csv(text, "data.csv", kSeriesHeader)); });
    EXPECT_NE(msg.find("data.csv:4:4"), std::string::npos) << msg;
}

TEST(CsvErrors, WrongFieldCount) {
    const std::string text = "freq_hz,psd\n1,2\n2,3,4\n";
    const auto msg = expect_invalid([&] { parse_csv(text, "p.csv", kSpectrumHeader); });
    EXPECT_NE(msg.find("p.csv:3:5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 2 fields"), std::string::npos) << msg;
}

TEST(CsvErrors, WrongHeader) {
    const auto msg = expect_invalid([&] { parse_csv("tau_s,adev\n1,2\n", "a.csv", kAllanHeader); });
    EXPECT_NE(msg.find("a.csv:1:1"), std::string::npos) << msg;
}

TEST(CsvErrors, NoRows) { expect_invalid([&] { parse_csv("freq_hz,psd\n", "p.csv", kSpectrumHeader); }); }

TEST(CsvErrors, NonUniformTime) {
    const std::string text = "time_s,value,unit\n0,1,hertz\n1,1,hertz\n2.5,1,hertz\n";
    const auto msg = expect_invalid([&] { parse_series(parse_csv(text, "s.csv", kSeriesHeader)); });
    EXPECT_NE(msg.find("s.csv:4:1"), std::string::npos) << msg;
}

TEST(CsvErrors, MixedUnits) {
    const std::string text = "time_s,value,unit\n0,1,hertz\n1,1,seconds\n";
    const auto msg = expect_invalid([&] { parse_series(parse_csv(text, "s.csv", kSeriesHeader)); });
    EXPECT_NE(msg.find("s.csv:3:5"), std::string::npos) << msg;
}

TEST(CsvErrors, DecreasingFrequency) {
    expect_invalid([&] { parse_spectrum(parse_csv("freq_hz,psd\n2,1\n1,1\n", "p.csv", kSpectrumHeader)); });
}

TEST(CsvErrors, NegativeShots) {
    const auto msg =
        expect_invalid([&] { parse_decay(parse_csv("delay_s,population,shots\n0,1,-3\n", "d.csv", kDecayHeader)); });
    EXPECT_NE(msg.find("d.csv:2:5"), std::string::npos) << msg;
}

TEST(CsvErrors, MissingFileIsIoError) { EXPECT_THROW(read_series("/nonexistent/dir/s.csv"), IoError); }

TEST(AtomicWrite, RefusesOverwriteWithoutForce) {
    const auto dir = scratch("atomic");
    const auto p = dir / "f.txt";
    write_file_atomic(p, "one", false);
    EXPECT_THROW(write_file_atomic(p, "two", false), IoError);
    EXPECT_EQ(read_file(p), "one");
    write_file_atomic(p, "three", true);
    EXPECT_EQ(read_file(p), "three");
    EXPECT_FALSE(fs::exists(dir / "f.txt.tmp"));
}

TEST(AtomicWrite, CreatesParentDirectories) {
    const auto dir = scratch("atomic_nested");
    write_file_atomic(dir / "a" / "b" / "c.txt", "x", false);
    EXPECT_EQ(read_file(dir / "a" / "b" / "c.txt"), "x");
}

TEST(Config, PresetRoundTripsThroughJson) {
    for (const auto& name : scenario_names()) {
        const RunConfig c = preset_config(name);
        const RunConfig back = config_from_json(to_json(c));
        EXPECT_EQ(to_json(back).dump(), to_json(c).dump()) << name;
        EXPECT_EQ(config_hash(back), config_hash(c)) << name;
    }
}

TEST(Config, ScenarioKeyLoadsPreset) {
    const auto c = parse_config(R"({"schema_version": 1, "scenario": "sample-b-frequency"})", "c.json");
    EXPECT_EQ(c.generator.n, 8192u);
    EXPECT_TRUE(c.estimator.welch.detrend);
    ASSERT_TRUE(c.generator.observable.ensemble.has_value());
    EXPECT_EQ(c.generator.observable.ensemble->n_fluctuators, 40u);
}

TEST(Config, OverlayKeepsUnspecifiedFields) {
    const auto c = parse_config(R"({"schema_version": 1, "scenario": "sample-a-t1", "fit": {"max_lorentzians": 1}})",
                                "c.json");
    EXPECT_EQ(c.fit.max_lorentzians, 1u);
    EXPECT_TRUE(c.fit.allow_one_over_f);
    EXPECT_EQ(c.generator.n, 32768u);
}

TEST(Config, UnknownKeysRejectedAtEveryLevel) {
    for (const char* text : {
             R"({"schema_version": 1, "sed": 3})",
             R"({"schema_version": 1, "fit": {"max_lorentzian": 2}})",
             R"({"schema_version": 1, "generator": {"n": 100, "components": [{"type": "white", "lvl": 1}]}})",
             R"({"schema_version": 1, "protocols": {"qubit": {"T1": 1e-5}}})",
         }) {
        const auto msg = expect_invalid([&] { parse_config(text, "c.json"); });
        EXPECT_NE(msg.find("unknown key"), std::string::npos) << msg;
    }
}

TEST(Config, SchemaVersion) {
    auto msg = expect_invalid([&] { parse_config(R"({"schema_version": 2})", "c.json"); });
    EXPECT_NE(msg.find("schema_version 2"), std::string::npos) << msg;
    msg = expect_invalid([&] { parse_config(R"({"seed": 1})", "c.json"); });
    EXPECT_NE(msg.find("missing schema_version"), std::string::npos) << msg;
}

TEST(Config, ModulePreconditionsCheckedAtLoad) {
    for (const char* text : {
             R"({"schema_version": 1, "generator": {"components": [{"type": "lorentzian", "total_power": 1, "corner_frequency": -1}]}})",
             R"({"schema_version": 1, "generator": {"components": [{"type": "one_over_f", "amplitude": 1, "exponent": 2}]}})",
             R"({"schema_version": 1, "generator": {"dt": 0}})",
             R"({"schema_version": 1, "protocols": {"qubit": {"t1": 1e-5, "t2": 5e-5}}})",
             R"({"schema_version": 1, "protocols": {"rabi": {"start": 10, "stop": 1e6, "count": 5, "log": true}}})",
             R"({"schema_version": 1, "protocols": {"shots": 0}})",
             R"({"schema_version": 1, "scenario": "sample-c"})",
             R"({"schema_version": 1, "estimator": {"overlap": 1.0}})",
             R"({"schema_version": 1, "generator": {"components": [{"type": "white", "level": 1}, {"type": "white", "level": 2}]}})",
             R"({"schema_version": 1,)",
         }) {
        expect_invalid([&] { parse_config(text, "c.json"); });
    }
}

TEST(Config, HashIgnoresSeedThreadsAndOutputDir) {
    RunConfig a = preset_config("sample-a-t1");
    RunConfig b = a;
    b.seed = 999;
    b.threads = 8;
    b.output_dir = "elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.fit.max_lorentzians = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, Fnv1aReferenceValues) {
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
}

TEST(Report, JsonRoundTrip) {
    FitReport r;
    r.model.add(White{8e-11});
    r.model.add(Lorentzian{1.6e-11, 7.5e-5});
    r.model.add(OneOverF{3e-3, 0.9});
    r.residual_psd = 0.125;
    r.residual_allan = 0.0625;
    r.component_errors = {{1, "corner_frequency", 7.5e-5, 1e-5}};
    r.n_lorentzians_considered = 3;
    r.classification = Classification::single_fluctuator_dominated;
    r.drift = DriftEstimate{1.0 / 600.0, 1e-4, 327680.0};
    r.telegraph = TelegraphDetection{true, 3.9e5, 7.2e5, 0.5, 2e-3, 12.0};
    r.band_lo = 1e-5;
    r.band_hi = 0.05;
    r.shares = {0.1, 0.2, 0.7, 0.6, 0.0};
    r.information_criterion = -812.5;
    r.one_over_f_to_white_ratio = 0.3;
    r.notes = {"one", "two"};
    const auto back = parse_report(report_text(r, kProv, "noise-fit"), "r.json");
    EXPECT_EQ(back.provenance.config_hash, kProv.config_hash);
    EXPECT_EQ(back.provenance.seed, kProv.seed);
    EXPECT_EQ(back.source, "noise-fit");
    // Serializing the parsed report reproduces the text exactly.
    EXPECT_EQ(report_text(back.report, back.provenance, back.source), report_text(r, kProv, "noise-fit"));
    EXPECT_EQ(back.report.classification, r.classification);
    EXPECT_EQ(back.report.model.all<Lorentzian>()[0].corner_frequency, 7.5e-5);
    EXPECT_EQ(back.report.drift->rate, r.drift->rate);
    EXPECT_TRUE(back.report.telegraph->bimodal);
}

TEST(Report, SchemaMismatch) {
    const auto msg = expect_invalid([&] { parse_report(R"({"schema_version": 7})", "r.json"); });
    EXPECT_NE(msg.find("schema_version 7"), std::string::npos) << msg;
    expect_invalid([&] { parse_report(R"({"schema_version": 1})", "r.json"); });
}

TEST(Svg, RendersDeterministically) {
    Plot p{"t<1>", "x", "y", true, true,
           {{"data", {1e-3, 1e-2, 1e-1}, {5.0, 2.0, 1.0}, true, "#000000"},
            {"model", {1e-3, 1e-1}, {4.0, 1.5}, false, "#ff0000"}}};
    const auto a = render_svg(p);
    EXPECT_EQ(a, render_svg(p));
    EXPECT_EQ(a.rfind("<svg", 0), 0u);
    EXPECT_NE(a.find("</svg>"), std::string::npos);
    EXPECT_NE(a.find("<polyline"), std::string::npos);
    EXPECT_NE(a.find("t&lt;1&gt;"), std::string::npos);
    EXPECT_EQ(a.find("nan"), std::string::npos);
}

TEST(Svg, DegenerateData) {
    Plot p{"flat", "x", "y", false, false, {{"", {0.0, 1.0}, {3.0, 3.0}, false, "#000000"}}};
    const auto s = render_svg(p);
    EXPECT_EQ(s.find("nan"), std::string::npos);
    EXPECT_EQ(s.find("inf"), std::string::npos);
}

TEST(Commands, AnalyzeConstantSeriesGivesZeros) {
    const auto dir = scratch("constant");
    const TimeSeries ts(std::vector<double>(512, 4.25), 10.0, Unit::seconds);
    write_file_atomic(dir / "series.csv", series_csv(ts, kProv), false);
    const auto ctx = quiet_context(preset_config(""), dir);
    cmd_analyze(ctx, dir / "series.csv");
    const auto psd = read_spectrum(dir / "psd.csv");
    for (double s : psd.psd()) EXPECT_LT(s, 1e-25);
    const auto allan = read_allan(dir / "allan.csv");
    ASSERT_GT(allan.size(), 0u);
    for (double a : allan.adev()) EXPECT_EQ(a, 0.0);
}

TEST(Commands, DerivedFilesKeepInputSeed) {
    const auto dir = scratch("seed");
    const TimeSeries ts(awkward_values(256), 1.0);
    write_file_atomic(dir / "series.csv", series_csv(ts, {"feed", 1234}), false);
    auto ctx = quiet_context(preset_config(""), dir);
    cmd_analyze(ctx, dir / "series.csv");
    EXPECT_EQ(read_csv(dir / "psd.csv", kSpectrumHeader).provenance()->seed, 1234u);
    ctx.seed_given = true;
    ctx.config.seed = 5;
    ctx.force = true;
    cmd_analyze(ctx, dir / "series.csv");
    EXPECT_EQ(read_csv(dir / "allan.csv", kAllanHeader).provenance()->seed, 5u);
}

TEST(Commands, SimulateIsDeterministicAcrossRunsAndThreads) {
    RunConfig cfg = preset_config("sample-b-frequency");
    cfg.generator.n = 2048;
    const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
    cmd_simulate(quiet_context(cfg, a));
    cmd_simulate(quiet_context(cfg, b));
    cfg.threads = 4;
    cmd_simulate(quiet_context(cfg, c));
    for (const char* f : {"series.csv", "relaxation.csv", "ramsey.csv"}) {
        EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
        EXPECT_EQ(read_file(a / f), read_file(c / f)) << f;
    }
}

TEST(Commands, EveryOutputCarriesHashAndSeed) {
    RunConfig cfg = preset_config("resonator-q");
    cfg.seed = 77;
    const auto dir = scratch("prov");
    const auto ctx = quiet_context(cfg, dir);
    cmd_simulate(ctx);
    cmd_analyze(ctx, dir / "series.csv");
    cmd_fit(ctx, fit_inputs_from(dir));
    const std::string hash = config_hash(cfg);
    for (const char* f : {"series.csv", "relaxation.csv", "ramsey.csv", "psd.csv", "allan.csv"}) {
        const auto text = read_file(dir / f);
        EXPECT_NE(text.find("# config_hash: " + hash), std::string::npos) << f;
        EXPECT_NE(text.find("# seed: 77"), std::string::npos) << f;
    }
    const auto rep = read_report(dir / "fit_report.json");
    EXPECT_EQ(rep.provenance.config_hash, hash);
    EXPECT_EQ(rep.provenance.seed, 77u);
}

TEST(Commands, SampleAPipelineBracketsBothCorners) {
    const auto dir = scratch("sample_a");
    const auto ctx = quiet_context(preset_config("sample-a-t1"), dir);
    cmd_simulate(ctx);
    cmd_analyze(ctx, dir / "series.csv");
    cmd_fit(ctx, fit_inputs_from(dir));
    const auto rep = read_report(dir / "fit_report.json").report;
    const auto ls = rep.model.all<Lorentzian>();
    ASSERT_EQ(ls.size(), 2u);
    std::vector<double> fc{ls[0].corner_frequency, ls[1].corner_frequency};
    std::sort(fc.begin(), fc.end());
    EXPECT_GT(fc[0], 75e-6 / 2);
    EXPECT_LT(fc[0], 75e-6 * 2);
    EXPECT_GT(fc[1], 800e-6 / 2);
    EXPECT_LT(fc[1], 800e-6 * 2);
}

TEST(Commands, SpinlockFromTableMatchesSimulation) {
    RunConfig cfg = preset_config("");
    cfg.protocols.shots = kIdealShots;
    const auto dir = scratch("spin");
    auto ctx = quiet_context(cfg, dir / "sim");
    cmd_spinlock(ctx, std::nullopt);
    ctx.out = dir / "table";
    cmd_spinlock(ctx, dir / "sim" / "gamma.csv");
    EXPECT_EQ(read_file(dir / "sim" / "spinlock_psd.csv"), read_file(dir / "table" / "spinlock_psd.csv"));
    const auto rep = read_report(dir / "sim" / "spinlock_report.json").report;
    ASSERT_TRUE(rep.model.has<OneOverF>());
    EXPECT_NEAR(rep.model.all<OneOverF>()[0].amplitude / 3e7, 1.0, 0.1);
    EXPECT_NEAR(rep.model.all<White>()[0].level / 200.0, 1.0, 0.1);
}

TEST(Commands, ReportWritesPlotsAndTheirData) {
    const auto dir = scratch("report");
    RunConfig cfg = preset_config("resonator-q");
    const auto ctx = quiet_context(cfg, dir);
    cmd_simulate(ctx);
    cmd_analyze(ctx, dir / "series.csv");
    cmd_fit(ctx, fit_inputs_from(dir));
    cmd_report(ctx, dir);
    for (const char* f : {"series.svg", "psd.svg", "psd_model.csv", "allan.svg", "allan_model.csv", "relaxation.svg",
                          "ramsey.svg", "summary.md"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto model = read_spectrum(dir / "psd_model.csv");
    EXPECT_EQ(model.size(), read_spectrum(dir / "psd.csv").size());
    EXPECT_NE(read_file(dir / "summary.md").find("single-fluctuator-dominated"), std::string::npos);
    EXPECT_THROW(cmd_report(ctx, dir), IoError);
}

TEST(Commands, ReportOnEmptyDirectory) {
    const auto dir = scratch("report_empty");
    EXPECT_THROW(cmd_report(quiet_context(preset_config(""), dir), dir), InvalidInput);
    EXPECT_THROW(cmd_report(quiet_context(preset_config(""), dir), dir / "missing"), IoError);
}
