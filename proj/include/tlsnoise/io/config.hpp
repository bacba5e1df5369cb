#pragma once

// RunConfig: everything a CLI run needs, stored as JSON with a
// schema_version field. Unknown keys are rejected at every level.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "tlsnoise/errors.hpp"
#include "tlsnoise/fluctuators.hpp"
#include "tlsnoise/io/csv.hpp"
#include "tlsnoise/noise_fit.hpp"
#include "tlsnoise/noise_model.hpp"
#include "tlsnoise/pipeline.hpp"
#include "tlsnoise/qubit.hpp"
#include "tlsnoise/scenarios.hpp"
#include "tlsnoise/spectral.hpp"
#include "tlsnoise/spinlock.hpp"

namespace tlsnoise::io {

using Json = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;

struct GeneratorConfig {
    ObservableSpec observable;
    std::size_t n = 4096;
    double dt = 10.0;
};

struct GridConfig {
    double start = 0.0;
    double stop = 0.0;
    std::size_t count = 0;
    bool log = false;

    std::vector<double> values() const { return log ? logspace(start, stop, count) : linspace(start, stop, count); }
};

struct ProtocolConfig {
    QubitSpec qubit{5e9, 56e-6, 40e-6};
    GridConfig delays{0.0, 300e-6, 61, false};
    Shots shots = std::uint64_t{1000};
    GridConfig rabi{1e4, 1e7, 31, true};
    GridConfig spinlock_delays{0.0, 300e-6, 61, false};
    NoiseModel spinlock_noise;            ///< S(Omega_R) in 1/s
    GridConfig ramsey_delays{0.0, 400e-6, 2001, false};
    double ramsey_drive = 1e6;            ///< Hz
    std::optional<TlsCoupling> coupling;  ///< Ramsey beats when set
};

struct RunConfig {
    std::string scenario; ///< preset name, empty for a custom generator
    std::uint64_t seed = 42;
    std::string output_dir = "out";
    unsigned threads = 1;
    GeneratorConfig generator;
    AnalysisOptions estimator;
    FitOptions fit;
    ProtocolConfig protocols;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& where, const std::string& what) {
    throw InvalidInput("config: " + (where.empty() ? std::string() : where + ": ") + what);
}

inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) config_fail(where, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) config_fail(where, "unknown key '" + key + "'");
}

inline std::string join(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
}

inline double get_number(const Json& j, const std::string& where, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) config_fail(join(where, key), "expected a number");
    return v.get<double>();
}

inline std::uint64_t get_count(const Json& j, const std::string& where, const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
        config_fail(join(where, key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

inline bool get_bool(const Json& j, const std::string& where, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_boolean()) config_fail(join(where, key), "expected true or false");
    return v.get<bool>();
}

inline std::string get_string(const Json& j, const std::string& where, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_string()) config_fail(join(where, key), "expected a string");
    return v.get<std::string>();
}

inline Unit unit_from(const std::string& where, const std::string& s) {
    try {
        return parse_unit(s);
    } catch (const InvalidInput&) {
        config_fail(where, "unknown unit '" + s + "'");
    }
}

inline Json component_json(const NoiseComponent& c) {
    return std::visit(
        [](const auto& x) -> Json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, White>) return {{"type", "white"}, {"level", x.level}};
            else if constexpr (std::is_same_v<T, OneOverF>)
                return {{"type", "one_over_f"}, {"amplitude", x.amplitude}, {"exponent", x.exponent}};
            else if constexpr (std::is_same_v<T, Lorentzian>)
                return {{"type", "lorentzian"}, {"total_power", x.total_power}, {"corner_frequency", x.corner_frequency}};
            else return {{"type", "drift"}, {"rate", x.rate}};
        },
        c);
}

inline NoiseComponent component_from(const Json& j, const std::string& where) {
    const std::string type = get_string(j, where, "type", "");
    NoiseComponent c;
    if (type == "white") {
        check_keys(j, where, {"type", "level"});
        c = White{get_number(j, where, "level", 0.0)};
    } else if (type == "one_over_f") {
        check_keys(j, where, {"type", "amplitude", "exponent"});
        c = OneOverF{get_number(j, where, "amplitude", 0.0), get_number(j, where, "exponent", 1.0)};
    } else if (type == "lorentzian") {
        check_keys(j, where, {"type", "total_power", "corner_frequency"});
        c = Lorentzian{get_number(j, where, "total_power", 0.0), get_number(j, where, "corner_frequency", 1.0)};
    } else if (type == "drift") {
        check_keys(j, where, {"type", "rate"});
        c = Drift{get_number(j, where, "rate", 0.0)};
    } else {
        config_fail(where, "unknown component type '" + type + "'");
    }
    try {
        validate(c);
    } catch (const InvalidInput& e) {
        config_fail(where, e.what());
    }
    return c;
}

inline Json model_json(const NoiseModel& m) {
    Json out = Json::array();
    for (const auto& c : m.components()) out.push_back(component_json(c));
    return out;
}

inline NoiseModel model_from(const Json& j, const std::string& where) {
    if (!j.is_array()) config_fail(where, "expected a list of components");
    NoiseModel m;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string w = where + "[" + std::to_string(i) + "]";
        try {
            m.add(component_from(j[i], w));
        } catch (const InvalidInput& e) {
            const std::string msg = e.what();
            if (msg.rfind("config:", 0) == 0) throw;
            config_fail(w, msg);
        }
    }
    return m;
}

inline const char* initial_name(InitialState s) {
    switch (s) {
    case InitialState::low: return "low";
    case InitialState::high: return "high";
    case InitialState::stationary: return "stationary";
    }
    return "stationary";
}

inline Json grid_json(const GridConfig& g) {
    return {{"start", g.start}, {"stop", g.stop}, {"count", g.count}, {"log", g.log}};
}

inline GridConfig grid_from(const Json& j, const std::string& where, GridConfig g) {
    check_keys(j, where, {"start", "stop", "count", "log"});
    g.start = get_number(j, where, "start", g.start);
    g.stop = get_number(j, where, "stop", g.stop);
    g.count = static_cast<std::size_t>(get_count(j, where, "count", g.count));
    g.log = get_bool(j, where, "log", g.log);
    if (g.count < 2 || !(g.stop > g.start) || (g.log && g.start <= 0.0))
        config_fail(where, "need count >= 2 and stop > start (> 0 for log grids)");
    return g;
}

inline Json generator_json(const GeneratorConfig& g) {
    const auto& o = g.observable;
    Json j;
    j["n"] = g.n;
    j["dt"] = g.dt;
    j["base"] = o.base;
    j["unit"] = std::string(to_string(o.unit));
    if (o.floor) j["floor"] = *o.floor;
    j["components"] = model_json(o.model);
    Json tel = Json::array();
    for (const auto& t : o.telegraphs)
        tel.push_back({{"rate_up", t.rate_up},
                       {"rate_down", t.rate_down},
                       {"low", t.low_value},
                       {"high", t.high_value},
                       {"initial", initial_name(t.initial)}});
    j["telegraphs"] = tel;
    if (o.ensemble)
        j["ensemble"] = {{"n_fluctuators", o.ensemble->n_fluctuators},
                         {"corner_lo", o.ensemble->corner_lo},
                         {"corner_hi", o.ensemble->corner_hi},
                         {"amplitude", o.ensemble->amplitude}};
    return j;
}

inline GeneratorConfig generator_from(const Json& j, const std::string& where) {
    check_keys(j, where, {"n", "dt", "base", "unit", "floor", "components", "telegraphs", "ensemble"});
    GeneratorConfig g;
    g.n = static_cast<std::size_t>(get_count(j, where, "n", g.n));
    g.dt = get_number(j, where, "dt", g.dt);
    if (g.n < 2) config_fail(join(where, "n"), "must be >= 2");
    if (!(g.dt > 0.0)) config_fail(join(where, "dt"), "must be > 0");
    auto& o = g.observable;
    o.base = get_number(j, where, "base", 0.0);
    o.unit = unit_from(join(where, "unit"), get_string(j, where, "unit", "dimensionless"));
    if (j.contains("floor")) o.floor = get_number(j, where, "floor", 0.0);
    if (j.contains("components")) o.model = model_from(j.at("components"), join(where, "components"));
    if (j.contains("telegraphs")) {
        const auto& arr = j.at("telegraphs");
        if (!arr.is_array()) config_fail(join(where, "telegraphs"), "expected a list");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string w = join(where, "telegraphs") + "[" + std::to_string(i) + "]";
            const auto& t = arr[i];
            check_keys(t, w, {"rate_up", "rate_down", "low", "high", "initial"});
            TelegraphSpec s;
            s.rate_up = get_number(t, w, "rate_up", 0.0);
            s.rate_down = get_number(t, w, "rate_down", 0.0);
            s.low_value = get_number(t, w, "low", 0.0);
            s.high_value = get_number(t, w, "high", 1.0);
            const std::string init = get_string(t, w, "initial", "stationary");
            if (init == "low") s.initial = InitialState::low;
            else if (init == "high") s.initial = InitialState::high;
            else if (init == "stationary") s.initial = InitialState::stationary;
            else config_fail(join(w, "initial"), "expected low, high or stationary");
            try {
                validate(s);
            } catch (const InvalidInput& e) {
                config_fail(w, e.what());
            }
            o.telegraphs.push_back(s);
        }
    }
    if (j.contains("ensemble")) {
        const std::string w = join(where, "ensemble");
        const auto& e = j.at("ensemble");
        check_keys(e, w, {"n_fluctuators", "corner_lo", "corner_hi", "amplitude"});
        EnsembleSpec s;
        s.n_fluctuators = static_cast<std::size_t>(get_count(e, w, "n_fluctuators", s.n_fluctuators));
        s.corner_lo = get_number(e, w, "corner_lo", s.corner_lo);
        s.corner_hi = get_number(e, w, "corner_hi", s.corner_hi);
        s.amplitude = get_number(e, w, "amplitude", s.amplitude);
        try {
            validate(s);
        } catch (const InvalidInput& ex) {
            config_fail(w, ex.what());
        }
        o.ensemble = s;
    }
    return g;
}

inline const char* window_name(Window w) { return w == Window::hann ? "hann" : "rectangular"; }
inline const char* allan_mode_name(AllanMode m) { return m == AllanMode::overlapping ? "overlapping" : "non_overlapping"; }

inline Json estimator_json(const AnalysisOptions& a) {
    return {{"segment_length", a.welch.segment_length},
            {"overlap", a.welch.overlap},
            {"window", window_name(a.welch.window)},
            {"detrend", a.welch.detrend},
            {"allan_mode", allan_mode_name(a.allan_mode)},
            {"taus_per_decade", a.taus_per_decade},
            {"min_allan_count", a.min_allan_count}};
}

inline Window parse_window(const std::string& s, const std::string& where) {
    if (s == "hann") return Window::hann;
    if (s == "rectangular") return Window::rectangular;
    config_fail(where, "expected hann or rectangular");
}

inline AllanMode parse_allan_mode(const std::string& s, const std::string& where) {
    if (s == "overlapping") return AllanMode::overlapping;
    if (s == "non_overlapping") return AllanMode::non_overlapping;
    config_fail(where, "expected overlapping or non_overlapping");
}

inline AnalysisOptions estimator_from(const Json& j, const std::string& where, AnalysisOptions a) {
    check_keys(j, where,
               {"segment_length", "overlap", "window", "detrend", "allan_mode", "taus_per_decade", "min_allan_count"});
    a.welch.segment_length = static_cast<std::size_t>(get_count(j, where, "segment_length", a.welch.segment_length));
    a.welch.overlap = get_number(j, where, "overlap", a.welch.overlap);
    if (!(a.welch.overlap >= 0.0 && a.welch.overlap < 1.0)) config_fail(join(where, "overlap"), "must be in [0, 1)");
    a.welch.window = parse_window(get_string(j, where, "window", window_name(a.welch.window)), join(where, "window"));
    a.welch.detrend = get_bool(j, where, "detrend", a.welch.detrend);
    a.allan_mode =
        parse_allan_mode(get_string(j, where, "allan_mode", allan_mode_name(a.allan_mode)), join(where, "allan_mode"));
    a.taus_per_decade = static_cast<int>(get_count(j, where, "taus_per_decade", static_cast<std::uint64_t>(a.taus_per_decade)));
    if (a.taus_per_decade < 1) config_fail(join(where, "taus_per_decade"), "must be >= 1");
    a.min_allan_count = static_cast<std::size_t>(get_count(j, where, "min_allan_count", a.min_allan_count));
    return a;
}

inline Json fit_json(const FitOptions& f) {
    return {{"max_lorentzians", f.max_lorentzians},
            {"allow_one_over_f", f.allow_one_over_f},
            {"fit_exponent", f.fit_exponent},
            {"bins_per_decade", f.bins_per_decade}};
}

inline FitOptions fit_from(const Json& j, const std::string& where, FitOptions f) {
    check_keys(j, where, {"max_lorentzians", "allow_one_over_f", "fit_exponent", "bins_per_decade"});
    f.max_lorentzians = static_cast<std::size_t>(get_count(j, where, "max_lorentzians", f.max_lorentzians));
    f.allow_one_over_f = get_bool(j, where, "allow_one_over_f", f.allow_one_over_f);
    f.fit_exponent = get_bool(j, where, "fit_exponent", f.fit_exponent);
    f.bins_per_decade = static_cast<int>(get_count(j, where, "bins_per_decade", static_cast<std::uint64_t>(f.bins_per_decade)));
    if (f.bins_per_decade < 2) config_fail(join(where, "bins_per_decade"), "must be >= 2");
    return f;
}

inline Json protocols_json(const ProtocolConfig& p) {
    Json j;
    j["qubit"] = {{"f01", p.qubit.f01}, {"t1", p.qubit.t1}, {"t2", p.qubit.t2}};
    j["delays"] = grid_json(p.delays);
    j["shots"] = p.shots ? Json(*p.shots) : Json(nullptr);
    j["rabi"] = grid_json(p.rabi);
    j["spinlock_delays"] = grid_json(p.spinlock_delays);
    j["spinlock_noise"] = model_json(p.spinlock_noise);
    j["ramsey_delays"] = grid_json(p.ramsey_delays);
    j["ramsey_drive"] = p.ramsey_drive;
    if (p.coupling) {
        Json c = {{"detuning", p.coupling->detuning}, {"g", p.coupling->g}};
        if (p.coupling->tls_t2) c["tls_t2"] = *p.coupling->tls_t2;
        j["coupling"] = c;
    }
    return j;
}

inline ProtocolConfig protocols_from(const Json& j, const std::string& where, ProtocolConfig p) {
    check_keys(j, where,
               {"qubit", "delays", "shots", "rabi", "spinlock_delays", "spinlock_noise", "ramsey_delays", "ramsey_drive",
                "coupling"});
    if (j.contains("qubit")) {
        const std::string w = join(where, "qubit");
        const auto& q = j.at("qubit");
        check_keys(q, w, {"f01", "t1", "t2"});
        p.qubit.f01 = get_number(q, w, "f01", p.qubit.f01);
        p.qubit.t1 = get_number(q, w, "t1", p.qubit.t1);
        p.qubit.t2 = get_number(q, w, "t2", p.qubit.t2);
        try {
            validate(p.qubit);
        } catch (const InvalidInput& e) {
            config_fail(w, e.what());
        }
    }
    if (j.contains("delays")) p.delays = grid_from(j.at("delays"), join(where, "delays"), p.delays);
    if (j.contains("shots")) {
        const auto& s = j.at("shots");
        if (s.is_null()) p.shots = kIdealShots;
        else if (s.is_number_integer() && s.get<long long>() > 0) p.shots = s.get<std::uint64_t>();
        else config_fail(join(where, "shots"), "expected a positive integer or null");
    }
    if (j.contains("rabi")) p.rabi = grid_from(j.at("rabi"), join(where, "rabi"), p.rabi);
    if (j.contains("spinlock_delays"))
        p.spinlock_delays = grid_from(j.at("spinlock_delays"), join(where, "spinlock_delays"), p.spinlock_delays);
    if (j.contains("spinlock_noise")) p.spinlock_noise = model_from(j.at("spinlock_noise"), join(where, "spinlock_noise"));
    if (j.contains("ramsey_delays"))
        p.ramsey_delays = grid_from(j.at("ramsey_delays"), join(where, "ramsey_delays"), p.ramsey_delays);
    p.ramsey_drive = get_number(j, where, "ramsey_drive", p.ramsey_drive);
    if (j.contains("coupling")) {
        const std::string w = join(where, "coupling");
        const auto& c = j.at("coupling");
        if (c.is_null()) {
            p.coupling.reset();
        } else {
            check_keys(c, w, {"detuning", "g", "tls_t2"});
            TlsCoupling t;
            t.detuning = get_number(c, w, "detuning", 0.0);
            t.g = get_number(c, w, "g", 0.0);
            if (c.contains("tls_t2")) t.tls_t2 = get_number(c, w, "tls_t2", 0.0);
            try {
                validate(t);
            } catch (const InvalidInput& e) {
                config_fail(w, e.what());
            }
            p.coupling = t;
        }
    }
    return p;
}

} // namespace detail

/// Defaults for a named scenario; the empty name gives a bare white-noise run.
inline RunConfig preset_config(const std::string& scenario) {
    RunConfig c;
    c.protocols.spinlock_noise.add(White{200.0});
    c.protocols.spinlock_noise.add(OneOverF{3e7, 1.0});
    c.protocols.coupling = TlsCoupling{54e3, 26e3, std::nullopt};
    if (scenario.empty()) {
        c.generator.observable.model.add(White{1.0});
        return c;
    }
    const Scenario s = scenario_by_name(scenario);
    c.scenario = s.name;
    c.generator.observable = s.observable;
    c.generator.n = s.n;
    c.generator.dt = s.dt;
    c.estimator.welch.detrend = s.detrend;
    if (s.observable.unit == Unit::seconds) c.protocols.qubit.t1 = s.observable.base;
    c.protocols.qubit.t2 = std::min(c.protocols.qubit.t2, 2.0 * c.protocols.qubit.t1);
    return c;
}

/// Checks that cut across sections; run after every load.
inline void validate_config(const RunConfig& c) {
    const auto& p = c.protocols;
    if (p.rabi.start < kSpinLockMinRabi || p.rabi.stop > kSpinLockMaxRabi)
        detail::config_fail("protocols.rabi", "Rabi grid must lie within [1 kHz, 10 MHz]");
    for (const auto* g : {&p.delays, &p.spinlock_delays, &p.ramsey_delays})
        if (g->start < 0.0) detail::config_fail("protocols", "delays must be >= 0");
    if (p.coupling && p.ramsey_delays.count < 16) detail::config_fail("protocols.ramsey_delays", "need >= 16 points");
    const auto& o = c.generator.observable;
    for (const auto& t : o.telegraphs)
        if (t.rate_up * c.generator.dt > 5.0 || t.rate_down * c.generator.dt > 5.0)
            detail::config_fail("generator.telegraphs", "switching rate times dt must be <= 5");
}

/// Full JSON form. Every field is written so the file documents the run.
inline Json to_json(const RunConfig& c) {
    Json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["scenario"] = c.scenario;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    j["generator"] = detail::generator_json(c.generator);
    j["estimator"] = detail::estimator_json(c.estimator);
    j["fit"] = detail::fit_json(c.fit);
    j["protocols"] = detail::protocols_json(c.protocols);
    return j;
}

/// Starts from the preset named by "scenario" (if any) and applies the
/// remaining sections on top. A "generator" section replaces the preset
/// generator as a whole.
inline RunConfig config_from_json(const Json& j) {
    detail::check_keys(j, "",
                       {"schema_version", "scenario", "seed", "output_dir", "threads", "generator", "estimator", "fit",
                        "protocols"});
    if (!j.contains("schema_version")) detail::config_fail("", "missing schema_version");
    const auto& v = j.at("schema_version");
    if (!v.is_number_integer() || v.get<long long>() != kConfigSchemaVersion)
        detail::config_fail("", "unsupported schema_version " + v.dump() + " (this build reads version " +
                                    std::to_string(kConfigSchemaVersion) + ")");
    const std::string scenario = detail::get_string(j, "", "scenario", "");
    RunConfig c;
    try {
        c = preset_config(scenario);
    } catch (const InvalidInput& e) {
        detail::config_fail("scenario", e.what());
    }
    c.seed = detail::get_count(j, "", "seed", c.seed);
    c.output_dir = detail::get_string(j, "", "output_dir", c.output_dir);
    c.threads = static_cast<unsigned>(detail::get_count(j, "", "threads", c.threads));
    if (c.threads < 1) detail::config_fail("threads", "must be >= 1");
    if (j.contains("generator")) c.generator = detail::generator_from(j.at("generator"), "generator");
    if (j.contains("estimator")) c.estimator = detail::estimator_from(j.at("estimator"), "estimator", c.estimator);
    if (j.contains("fit")) c.fit = detail::fit_from(j.at("fit"), "fit", c.fit);
    if (j.contains("protocols")) c.protocols = detail::protocols_from(j.at("protocols"), "protocols", c.protocols);
    validate_config(c);
    return c;
}

inline RunConfig parse_config(const std::string& text, const std::string& path) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InvalidInput(path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

inline RunConfig load_config(const fs::path& path) { return parse_config(read_file(path), path.string()); }

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Hash of everything that shapes the data. Seed, thread count and output
/// directory are left out: the seed is recorded on its own and the other two
/// do not change results.
inline std::string config_hash(const RunConfig& c) {
    Json j = to_json(c);
    j.erase("seed");
    j.erase("threads");
    j.erase("output_dir");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

inline Provenance provenance(const RunConfig& c) { return {config_hash(c), c.seed}; }

} // namespace tlsnoise::io
