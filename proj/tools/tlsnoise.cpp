// tlsnoise: simulate, analyze and fit fluctuation records.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O failure.
// Failures print one line: error[<code>]: <detail>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "tlsnoise/errors.hpp"
#include "tlsnoise/io/commands.hpp"
#include "tlsnoise/io/config.hpp"

namespace {

using namespace tlsnoise;
namespace fs = std::filesystem;

int exit_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::invalid_input: return 2;
    case ErrorKind::numerical: return 3;
    case ErrorKind::io: return 4;
    }
    return 3;
}

int fail(const char* code, int status, std::string detail) {
    for (char& c : detail)
        if (c == '\n' || c == '\r') c = ' ';
    std::cerr << "error[" << code << "]: " << detail << "\n";
    return status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and analysis of qubit noise records"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, scenario, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool force = false, quiet = false;
    app.add_option("--config", config_path, "run configuration (JSON)");
    app.add_option("--scenario", scenario, "built-in scenario preset (without --config)");
    app.add_option("--seed", seed, "master seed, overrides the config");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    app.add_flag("--force", force, "overwrite existing output files");
    app.add_flag("--quiet", quiet, "suppress progress and warnings");

    auto* sim = app.add_subcommand("simulate", "generate a series and decay curves from the config");

    auto* ana = app.add_subcommand("analyze", "Welch PSD and Allan deviation of a series CSV");
    std::string series_in;
    std::optional<std::size_t> segment_length;
    std::optional<double> overlap;
    std::string window, allan_mode;
    bool detrend = false, no_detrend = false;
    ana->add_option("series", series_in, "time series CSV (time_s,value,unit)")->required();
    ana->add_option("--segment-length", segment_length, "Welch segment length in samples");
    ana->add_option("--overlap", overlap, "Welch segment overlap fraction");
    ana->add_option("--window", window, "hann or rectangular");
    ana->add_option("--allan-mode", allan_mode, "overlapping or non_overlapping");
    ana->add_flag("--detrend", detrend, "remove a linear trend first");
    ana->add_flag("--no-detrend", no_detrend, "keep the trend");

    auto* fit = app.add_subcommand("fit", "decompose a PSD (and Allan curve) into noise components");
    std::string fit_in;
    std::optional<std::string> allan_in, fit_series_in;
    std::optional<std::size_t> max_lorentzians;
    fit->add_option("input", fit_in, "PSD CSV, or a run directory with psd.csv/allan.csv/series.csv")->required();
    fit->add_option("--allan", allan_in, "Allan CSV (tau_s,adev,count)");
    fit->add_option("--series", fit_series_in, "series CSV for telegraph and drift checks");
    fit->add_option("--max-lorentzians", max_lorentzians, "upper bound on Lorentzian components");

    auto* spin = app.add_subcommand("spinlock", "spin-locking noise spectroscopy");
    std::optional<std::string> gamma_in;
    std::optional<double> t1;
    spin->add_option("--gamma", gamma_in, "rate table CSV (rabi_hz,gamma_per_s,gamma_err) instead of simulating");
    spin->add_option("--t1", t1, "T1 in seconds, overrides the config");

    auto* rep = app.add_subcommand("report", "plots and summary for a run directory");
    std::string run_dir;
    rep->add_option("run_dir", run_dir, "directory written by the other subcommands")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("invalid-input", 2, e.what());
    }

    try {
        io::Context ctx;
        if (!config_path.empty() && !scenario.empty())
            throw InvalidInput("--config and --scenario are mutually exclusive");
        ctx.config = config_path.empty() ? io::preset_config(scenario) : io::load_config(config_path);
        if (seed) ctx.config.seed = *seed;
        if (threads) ctx.config.threads = *threads;
        ctx.seed_given = seed.has_value();
        ctx.force = force;
        ctx.quiet = quiet;

        auto& est = ctx.config.estimator;
        if (segment_length) est.welch.segment_length = *segment_length;
        if (overlap) {
            require(*overlap >= 0.0 && *overlap < 1.0, "--overlap must be in [0, 1)");
            est.welch.overlap = *overlap;
        }
        if (!window.empty()) est.welch.window = io::detail::parse_window(window, "--window");
        if (!allan_mode.empty()) est.allan_mode = io::detail::parse_allan_mode(allan_mode, "--allan-mode");
        require(!(detrend && no_detrend), "--detrend and --no-detrend are mutually exclusive");
        if (detrend) est.welch.detrend = true;
        if (no_detrend) est.welch.detrend = false;
        if (max_lorentzians) ctx.config.fit.max_lorentzians = *max_lorentzians;

        if (!out_dir.empty()) ctx.out = out_dir;
        else if (rep->parsed()) ctx.out = run_dir;
        else ctx.out = ctx.config.output_dir;

        if (sim->parsed()) {
            io::cmd_simulate(ctx);
        } else if (ana->parsed()) {
            io::cmd_analyze(ctx, series_in);
        } else if (fit->parsed()) {
            io::FitInputs in = io::fit_inputs_from(fit_in);
            if (allan_in) in.allan = *allan_in;
            if (fit_series_in) in.series = *fit_series_in;
            io::cmd_fit(ctx, in);
        } else if (spin->parsed()) {
            std::optional<fs::path> table;
            if (gamma_in) table = *gamma_in;
            io::cmd_spinlock(ctx, table, t1);
        } else if (rep->parsed()) {
            io::cmd_report(ctx, run_dir);
        }
    } catch (const Error& e) {
        return fail(error_code(e.kind()), exit_code(e.kind()), e.what());
    } catch (const fs::filesystem_error& e) {
        return fail("io-failure", 4, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail("invalid-input", 2, e.what());
    } catch (const std::exception& e) {
        return fail("numerical-failure", 3, e.what());
    }
    return 0;
}
