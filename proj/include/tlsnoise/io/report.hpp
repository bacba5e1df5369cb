#pragma once

// FitReport as JSON with schema_version, config hash and seed.

#include <cmath>
#include <limits>
#include <string>

#include "json.hpp"

#include "tlsnoise/errors.hpp"
#include "tlsnoise/io/config.hpp"
#include "tlsnoise/io/csv.hpp"
#include "tlsnoise/noise_fit.hpp"

namespace tlsnoise::io {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

/// JSON has no infinities; non-finite values travel as "inf", "-inf", "nan".
inline Json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

inline double num(const Json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw InvalidInput("expected a number, got '" + s + "'");
    }
    return j.get<double>();
}

} // namespace detail

inline Json report_json(const FitReport& r, const Provenance& p, const std::string& source = "") {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["config_hash"] = p.config_hash;
    j["seed"] = p.seed;
    if (!source.empty()) j["source"] = source;
    j["classification"] = std::string(to_string(r.classification));
    j["low_confidence"] = r.low_confidence;
    j["components"] = detail::model_json(r.model);
    Json errs = Json::array();
    for (const auto& e : r.component_errors)
        errs.push_back({{"component", e.component},
                        {"parameter", e.parameter},
                        {"value", detail::num(e.value)},
                        {"stderr", detail::num(e.stderr_)}});
    j["component_errors"] = errs;
    j["residual_psd"] = detail::num(r.residual_psd);
    j["residual_allan"] = detail::num(r.residual_allan);
    j["information_criterion"] = detail::num(r.information_criterion);
    j["n_lorentzians_considered"] = r.n_lorentzians_considered;
    j["band_hz"] = {detail::num(r.band_lo), detail::num(r.band_hi)};
    j["shares"] = {{"white", detail::num(r.shares.white)},
                   {"one_over_f", detail::num(r.shares.one_over_f)},
                   {"lorentzian", detail::num(r.shares.lorentzian)},
                   {"largest_lorentzian", detail::num(r.shares.largest_lorentzian)},
                   {"drift", detail::num(r.shares.drift)}};
    j["drift"] = r.drift ? Json{{"rate", detail::num(r.drift->rate)},
                                {"stderr", detail::num(r.drift->stderr_)},
                                {"duration", detail::num(r.drift->duration)}}
                         : Json(nullptr);
    if (r.telegraph) {
        const auto& t = *r.telegraph;
        j["telegraph"] = {{"bimodal", t.bimodal},
                          {"low_level", detail::num(t.low_level)},
                          {"high_level", detail::num(t.high_level)},
                          {"occupancy_high", detail::num(t.occupancy_high)},
                          {"estimated_corner", detail::num(t.estimated_corner)},
                          {"separation_ratio", detail::num(t.separation_ratio)}};
    } else {
        j["telegraph"] = nullptr;
    }
    j["one_over_f_to_white_ratio"] = r.one_over_f_to_white_ratio ? detail::num(*r.one_over_f_to_white_ratio) : Json(nullptr);
    j["notes"] = r.notes;
    return j;
}

inline std::string report_text(const FitReport& r, const Provenance& p, const std::string& source = "") {
    return report_json(r, p, source).dump(2) + "\n";
}

struct LoadedReport {
    FitReport report;
    Provenance provenance;
    std::string source;
};

inline LoadedReport report_from_json(const Json& j, const std::string& path) {
    auto fail = [&](const std::string& what) -> void { throw InvalidInput(path + ": " + what); };
    try {
        if (!j.is_object()) fail("expected a JSON object");
        if (!j.contains("schema_version")) fail("missing schema_version");
        if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<long long>() != kReportSchemaVersion)
            fail("unsupported schema_version " + j.at("schema_version").dump() + " (this build reads version " +
                 std::to_string(kReportSchemaVersion) + ")");
        LoadedReport out;
        auto& r = out.report;
        out.provenance.config_hash = j.at("config_hash").get<std::string>();
        out.provenance.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("source")) out.source = j.at("source").get<std::string>();
        r.classification = parse_classification(j.at("classification").get<std::string>());
        r.low_confidence = j.at("low_confidence").get<bool>();
        r.model = detail::model_from(j.at("components"), "components");
        for (const auto& e : j.at("component_errors"))
            r.component_errors.push_back({e.at("component").get<std::size_t>(), e.at("parameter").get<std::string>(),
                                          detail::num(e.at("value")), detail::num(e.at("stderr"))});
        r.residual_psd = detail::num(j.at("residual_psd"));
        r.residual_allan = detail::num(j.at("residual_allan"));
        r.information_criterion = detail::num(j.at("information_criterion"));
        r.n_lorentzians_considered = j.at("n_lorentzians_considered").get<std::size_t>();
        r.band_lo = detail::num(j.at("band_hz").at(0));
        r.band_hi = detail::num(j.at("band_hz").at(1));
        const auto& s = j.at("shares");
        r.shares = {detail::num(s.at("white")), detail::num(s.at("one_over_f")), detail::num(s.at("lorentzian")),
                    detail::num(s.at("largest_lorentzian")), detail::num(s.at("drift"))};
        if (!j.at("drift").is_null()) {
            const auto& d = j.at("drift");
            r.drift = DriftEstimate{detail::num(d.at("rate")), detail::num(d.at("stderr")), detail::num(d.at("duration"))};
        }
        if (!j.at("telegraph").is_null()) {
            const auto& t = j.at("telegraph");
            r.telegraph = TelegraphDetection{t.at("bimodal").get<bool>(),           detail::num(t.at("low_level")),
                                             detail::num(t.at("high_level")),      detail::num(t.at("occupancy_high")),
                                             detail::num(t.at("estimated_corner")), detail::num(t.at("separation_ratio"))};
        }
        if (!j.at("one_over_f_to_white_ratio").is_null())
            r.one_over_f_to_white_ratio = detail::num(j.at("one_over_f_to_white_ratio"));
        r.notes = j.at("notes").get<std::vector<std::string>>();
        return out;
    } catch (const Json::exception& e) {
        throw InvalidInput(path + ": malformed fit report: " + e.what());
    } catch (const InvalidInput& e) {
        const std::string msg = e.what();
        if (msg.rfind(path + ":", 0) == 0) throw;
        throw InvalidInput(path + ": " + msg);
    }
}

inline LoadedReport parse_report(const std::string& text, const std::string& path) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InvalidInput(path + ": " + e.what());
    }
    return report_from_json(j, path);
}

inline LoadedReport read_report(const fs::path& path) { return parse_report(read_file(path), path.string()); }

} // namespace tlsnoise::io
