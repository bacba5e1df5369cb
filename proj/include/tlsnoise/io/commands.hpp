#pragma once

// The five CLI subcommands as library calls. Each writes its files into
// Context::out and returns their paths.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tlsnoise/decay_fit.hpp"
#include "tlsnoise/fluctuators.hpp"
#include "tlsnoise/io/config.hpp"
#include "tlsnoise/io/csv.hpp"
#include "tlsnoise/io/report.hpp"
#include "tlsnoise/io/svg.hpp"
#include "tlsnoise/model_allan.hpp"
#include "tlsnoise/noise_fit.hpp"
#include "tlsnoise/pipeline.hpp"
#include "tlsnoise/qubit.hpp"
#include "tlsnoise/ramsey.hpp"
#include "tlsnoise/spectral.hpp"
#include "tlsnoise/spinlock.hpp"

namespace tlsnoise::io {

struct Context {
    RunConfig config;
    fs::path out;
    bool force = false;
    bool quiet = false;
    bool seed_given = false; ///< --seed was passed; otherwise inputs keep their own seed
    std::ostream* log = &std::cerr;
};

namespace detail {

inline void note(const Context& ctx, const std::string& line) {
    if (!ctx.quiet && ctx.log) *ctx.log << line << "\n";
}

inline void warn_all(const Context& ctx, const Diagnostics& d) {
    for (const auto& w : d.warnings) note(ctx, "warning: " + w);
}

inline fs::path emit(const Context& ctx, const std::string& name, const std::string& content,
                     std::vector<fs::path>& written) {
    const fs::path p = ctx.out / name;
    write_file_atomic(p, content, ctx.force);
    written.push_back(p);
    return p;
}

/// Provenance for files derived from an input: the input's seed survives
/// unless --seed was given.
inline Provenance derived(const Context& ctx, const std::optional<Provenance>& input) {
    Provenance p = provenance(ctx.config);
    if (input && !ctx.seed_given) p.seed = input->seed;
    return p;
}

inline std::optional<Provenance> file_provenance(const fs::path& path, std::string_view header) {
    return read_csv(path, header).provenance();
}

} // namespace detail

/// Time series from the generator plus relaxation and Ramsey curves from the
/// protocol section; also stores the resolved config.
inline std::vector<fs::path> cmd_simulate(const Context& ctx) {
    const auto& c = ctx.config;
    const Provenance prov = provenance(c);
    std::vector<fs::path> written;

    const auto gen = gen_observable(c.generator.observable, c.generator.n, c.generator.dt, c.seed, c.threads);
    detail::warn_all(ctx, gen.diagnostics);
    detail::emit(ctx, "series.csv", series_csv(gen.series, prov), written);

    const auto& p = c.protocols;
    const auto relax = sim_relaxation(p.qubit, p.delays.values(), p.shots, derive_seed(c.seed, stream::relaxation));
    detail::emit(ctx, "relaxation.csv", decay_csv(relax, prov), written);
    const auto ramsey = sim_ramsey(p.qubit, p.ramsey_drive, p.coupling, p.ramsey_delays.values(), p.shots,
                                   derive_seed(c.seed, stream::ramsey));
    detail::emit(ctx, "ramsey.csv", decay_csv(ramsey, prov), written);

    Json j = to_json(c);
    j["config_hash"] = prov.config_hash;
    detail::emit(ctx, "config.json", j.dump(2) + "\n", written);
    detail::note(ctx, "simulated " + std::to_string(gen.series.size()) + " samples (config " + prov.config_hash +
                          ", seed " + std::to_string(c.seed) + ")");
    return written;
}

/// Welch PSD and Allan deviation of a series file.
inline std::vector<fs::path> cmd_analyze(const Context& ctx, const fs::path& series_path) {
    const auto table = read_csv(series_path, kSeriesHeader);
    const TimeSeries ts = parse_series(table);
    const Provenance prov = detail::derived(ctx, table.provenance());
    const Analysis an = analyze_series(ts, ctx.config.estimator);
    std::vector<fs::path> written;
    detail::emit(ctx, "psd.csv", spectrum_csv(an.welch.spectrum, prov), written);
    detail::emit(ctx, "allan.csv", allan_csv(an.allan, prov), written);
    detail::note(ctx, "welch: " + std::to_string(an.welch.segments) + " segments of " +
                          std::to_string(an.welch.segment_length) + " samples; allan: " +
                          std::to_string(an.allan.size()) + " taus");
    return written;
}

struct FitInputs {
    fs::path psd;
    std::optional<fs::path> allan;
    std::optional<fs::path> series; ///< enables telegraph and drift checks
};

/// A directory argument picks up psd.csv, allan.csv and series.csv inside it.
inline FitInputs fit_inputs_from(const fs::path& arg) {
    FitInputs in;
    std::error_code ec;
    if (fs::is_directory(arg, ec)) {
        in.psd = arg / "psd.csv";
        if (fs::exists(arg / "allan.csv", ec)) in.allan = arg / "allan.csv";
        if (fs::exists(arg / "series.csv", ec)) in.series = arg / "series.csv";
    } else {
        in.psd = arg;
    }
    return in;
}

inline std::string describe(const FitReport& r) {
    std::ostringstream s;
    s << "classification: " << to_string(r.classification) << (r.low_confidence ? " (low confidence)" : "") << "\n";
    for (const auto& comp : r.model.components()) {
        s << "  " << component_name(comp) << ":";
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, White>) s << " level=" << x.level;
                else if constexpr (std::is_same_v<T, OneOverF>) s << " amplitude=" << x.amplitude << " exponent=" << x.exponent;
                else if constexpr (std::is_same_v<T, Lorentzian>)
                    s << " total_power=" << x.total_power << " corner_hz=" << x.corner_frequency;
                else s << " rate=" << x.rate;
            },
            comp);
        s << "\n";
    }
    return s.str();
}

inline std::vector<fs::path> cmd_fit(const Context& ctx, const FitInputs& in) {
    const auto psd_table = read_csv(in.psd, kSpectrumHeader);
    const PowerSpectrum psd = parse_spectrum(psd_table);
    std::optional<AllanCurve> allan;
    if (in.allan) allan = read_allan(*in.allan);
    const Provenance prov = detail::derived(ctx, psd_table.provenance());

    FitReport report = fit_noise_model(psd, allan, ctx.config.fit);
    if (in.series) {
        const TimeSeries ts = read_series(*in.series);
        const TimeSeries src = ctx.config.estimator.welch.detrend ? detrend_linear(ts).series : ts;
        attach_time_domain(report, detect_telegraph(src), estimate_drift(ts));
    }
    std::vector<fs::path> written;
    detail::emit(ctx, "fit_report.json", report_text(report, prov, "noise-fit"), written);
    detail::note(ctx, describe(report));
    return written;
}

/// Without a table the spin-locking experiment is simulated from the config;
/// with one, the given rates are inverted directly.
inline std::vector<fs::path> cmd_spinlock(const Context& ctx, const std::optional<fs::path>& gamma_table,
                                          std::optional<double> t1 = std::nullopt) {
    const auto& c = ctx.config;
    const auto& p = c.protocols;
    std::vector<SpinLockPoint> points;
    std::optional<Provenance> input;
    std::vector<fs::path> written;
    Provenance prov = provenance(c);
    if (gamma_table) {
        const auto table = read_csv(*gamma_table, kGammaHeader);
        points = parse_gamma(table);
        prov = detail::derived(ctx, table.provenance());
    } else {
        const auto rabi = p.rabi.values();
        const auto run = sim_spinlock(p.qubit, p.spinlock_noise, rabi, p.spinlock_delays.values(), p.shots,
                                      derive_seed(c.seed, stream::spinlock), c.threads);
        detail::warn_all(ctx, run.diagnostics);
        points = fit_spinlock_curves(run.rabi_frequencies, run.curves, c.threads);
        detail::emit(ctx, "gamma.csv", gamma_csv(points, prov), written);
    }
    const auto inv = invert_spinlock(points, t1.value_or(p.qubit.t1));
    detail::emit(ctx, "spinlock_psd.csv", spectrum_csv(inv.spectrum, prov), written);
    const FitReport report = fit_spinlock_spectrum(inv.spectrum, inv.psd_err);
    detail::emit(ctx, "spinlock_report.json", report_text(report, prov, "spin-lock"), written);
    std::ostringstream s;
    s << describe(report);
    if (report.one_over_f_to_white_ratio) s << "  1/f to white ratio: " << *report.one_over_f_to_white_ratio << "\n";
    detail::note(ctx, s.str());
    return written;
}

namespace detail {

inline std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

inline void summary_report(std::ostringstream& s, const std::string& title, const LoadedReport& lr) {
    const auto& r = lr.report;
    s << "## " << title << "\n\n";
    s << "- classification: " << to_string(r.classification) << (r.low_confidence ? " (low confidence)" : "") << "\n";
    s << "- config hash " << lr.provenance.config_hash << ", seed " << lr.provenance.seed << "\n";
    s << "- band: " << r.band_lo << " to " << r.band_hi << " Hz\n";
    s << "- shares: white " << r.shares.white << ", 1/f " << r.shares.one_over_f << ", lorentzian " << r.shares.lorentzian
      << " (largest " << r.shares.largest_lorentzian << "), drift " << r.shares.drift << "\n";
    if (r.drift) s << "- drift: " << r.drift->rate << " +/- " << r.drift->stderr_ << " units/s\n";
    if (r.telegraph && r.telegraph->bimodal)
        s << "- bimodal: levels " << r.telegraph->low_level << " / " << r.telegraph->high_level << ", corner ~"
          << r.telegraph->estimated_corner << " Hz\n";
    if (r.one_over_f_to_white_ratio) s << "- 1/f to white ratio: " << *r.one_over_f_to_white_ratio << "\n";
    s << "\n| component | parameters |\n|---|---|\n";
    for (const auto& comp : r.model.components()) {
        s << "| " << component_name(comp) << " | ";
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, White>) s << "level " << x.level;
                else if constexpr (std::is_same_v<T, OneOverF>) s << "amplitude " << x.amplitude << ", exponent " << x.exponent;
                else if constexpr (std::is_same_v<T, Lorentzian>)
                    s << "power " << x.total_power << ", corner " << x.corner_frequency << " Hz";
                else s << "rate " << x.rate;
            },
            comp);
        s << " |\n";
    }
    for (const auto& n : r.notes) s << "\nnote: " << n << "\n";
    s << "\n";
}

} // namespace detail

/// Plots and a markdown summary for whatever a run directory contains.
inline std::vector<fs::path> cmd_report(const Context& ctx, const fs::path& run_dir) {
    std::error_code ec;
    if (!fs::is_directory(run_dir, ec)) throw IoError(run_dir.string() + ": not a directory");
    auto have = [&](const char* name) { return fs::exists(run_dir / name, ec); };
    std::vector<fs::path> written;
    std::ostringstream md;
    md << "# Run summary\n\n";
    const Provenance prov = provenance(ctx.config);

    std::optional<LoadedReport> fit, spin;
    if (have("fit_report.json")) fit = read_report(run_dir / "fit_report.json");
    if (have("spinlock_report.json")) spin = read_report(run_dir / "spinlock_report.json");
    auto plot_prov = [&](const std::optional<LoadedReport>& r) { return r ? r->provenance : prov; };

    if (have("series.csv")) {
        const auto table = read_csv(run_dir / "series.csv", kSeriesHeader);
        const TimeSeries ts = parse_series(table);
        std::vector<double> t(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) t[i] = ts.time(i);
        Plot plot{"time series", "time (s)", "value (" + std::string(to_string(ts.unit())) + ")", false, false,
                  {{"", t, detail::to_vec(ts.values()), false, "#1f77b4"}}};
        detail::emit(ctx, "series.svg", render_svg(plot), written);
        md << "- series.csv: " << ts.size() << " samples, dt " << ts.dt() << " s\n";
    }
    if (have("psd.csv")) {
        const PowerSpectrum psd = read_spectrum(run_dir / "psd.csv");
        Plot plot{"power spectral density", "frequency (Hz)", "PSD (units^2/Hz)", true, true,
                  {{"Welch", detail::to_vec(psd.frequencies()), detail::to_vec(psd.psd()), true, "#1f77b4"}}};
        if (fit) {
            const auto model = model_psd(fit->report.model, psd.frequencies());
            detail::emit(ctx, "psd_model.csv", spectrum_csv(model, plot_prov(fit)), written);
            plot.series.push_back({"model", detail::to_vec(model.frequencies()), detail::to_vec(model.psd()), false, "#d62728"});
        }
        detail::emit(ctx, "psd.svg", render_svg(plot), written);
        md << "- psd.csv: " << psd.size() << " frequencies\n";
    }
    if (have("allan.csv")) {
        const AllanCurve allan = read_allan(run_dir / "allan.csv");
        Plot plot{"Allan deviation", "tau (s)", "Allan deviation", true, true,
                  {{"data", detail::to_vec(allan.taus()), detail::to_vec(allan.adev()), true, "#1f77b4"}}};
        if (fit && allan.size() > 0) {
            const auto model = model_allan(fit->report.model, allan.taus());
            detail::emit(ctx, "allan_model.csv", allan_csv(model, plot_prov(fit)), written);
            plot.series.push_back({"model", detail::to_vec(model.taus()), detail::to_vec(model.adev()), false, "#d62728"});
        }
        detail::emit(ctx, "allan.svg", render_svg(plot), written);
        md << "- allan.csv: " << allan.size() << " taus\n";
    }
    for (const char* name : {"relaxation", "ramsey"}) {
        const std::string file = std::string(name) + ".csv";
        if (!have(file.c_str())) continue;
        const DecayCurve c = read_decay(run_dir / file);
        Plot plot{name, "delay (s)", "population", false, false, {{"", c.delays, c.populations, true, "#1f77b4"}}};
        detail::emit(ctx, std::string(name) + ".svg", render_svg(plot), written);
        md << "- " << file << ": " << c.size() << " delays, " << (c.ideal() ? std::string("ideal") : std::to_string(c.shots) + " shots") << "\n";
    }
    if (have("spinlock_psd.csv")) {
        const PowerSpectrum s = read_spectrum(run_dir / "spinlock_psd.csv");
        Plot plot{"spin-locking noise spectrum", "Rabi frequency (Hz)", "S (1/s)", true, true,
                  {{"inverted", detail::to_vec(s.frequencies()), detail::to_vec(s.psd()), true, "#1f77b4"}}};
        if (spin) {
            const auto model = model_psd(spin->report.model, s.frequencies());
            detail::emit(ctx, "spinlock_model.csv", spectrum_csv(model, plot_prov(spin)), written);
            plot.series.push_back({"model", detail::to_vec(model.frequencies()), detail::to_vec(model.psd()), false, "#d62728"});
        }
        detail::emit(ctx, "spinlock.svg", render_svg(plot), written);
        md << "- spinlock_psd.csv: " << s.size() << " Rabi frequencies\n";
    }
    md << "\n";
    if (fit) detail::summary_report(md, "Noise fit", *fit);
    if (spin) detail::summary_report(md, "Spin-locking fit", *spin);
    if (written.empty() && !fit && !spin) throw InvalidInput(run_dir.string() + ": no recognized run files");
    detail::emit(ctx, "summary.md", md.str(), written);
    detail::note(ctx, "wrote " + std::to_string(written.size()) + " files to " + ctx.out.string());
    return written;
}

} // namespace tlsnoise::io
