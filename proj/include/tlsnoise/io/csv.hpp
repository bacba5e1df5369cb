#pragma once

// Flat CSV files for series, decay curves, spectra, Allan curves and
// spin-locking rate tables.
//
// Layout: optional "# key: value" comment lines, one header line, data rows.
// Every file written here carries "# config_hash" and "# seed" comments.
// Numbers are written in shortest round-trip form.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tlsnoise/errors.hpp"
#include "tlsnoise/qubit.hpp"
#include "tlsnoise/types.hpp"

namespace tlsnoise::io {

namespace fs = std::filesystem;

struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
};

inline std::string format_number(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline std::string format_number(std::uint64_t x) { return std::to_string(x); }

/// Writes via a sibling temp file and a rename so readers never see a
/// partial file. Refuses to replace an existing file unless force is set.
inline void write_file_atomic(const fs::path& path, const std::string& content, bool force) {
    std::error_code ec;
    if (fs::exists(path, ec) && !force)
        throw IoError(path.string() + ": file exists (use --force to overwrite)");
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError(path.parent_path().string() + ": cannot create directory: " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp.string() + ": cannot open for writing");
        out << content;
        out.flush();
        if (!out) throw IoError(tmp.string() + ": write failed");
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError(path.string() + ": rename failed");
    }
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path.string() + ": read failed");
    return ss.str();
}

struct CsvField {
    std::string text;
    std::size_t column = 1; ///< 1-based character column
};

struct CsvRow {
    std::size_t line = 0;
    std::vector<CsvField> fields;
};

struct CsvTable {
    std::string path;
    std::map<std::string, std::string> meta;
    std::vector<CsvRow> rows;

    [[noreturn]] void fail(std::size_t line, std::size_t column, const std::string& what) const {
        throw InvalidInput(path + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what);
    }

    double number(const CsvRow& row, std::size_t i) const {
        const auto& f = row.fields[i];
        double v = 0.0;
        const char* b = f.text.data();
        const char* e = b + f.text.size();
        const auto r = std::from_chars(b, e, v);
        if (f.text.empty() || r.ec != std::errc() || r.ptr != e || !std::isfinite(v))
            fail(row.line, f.column, "expected a finite number, got '" + std::string(f.text) + "'");
        return v;
    }

    std::uint64_t count(const CsvRow& row, std::size_t i) const {
        const auto& f = row.fields[i];
        std::uint64_t v = 0;
        const char* b = f.text.data();
        const char* e = b + f.text.size();
        const auto r = std::from_chars(b, e, v);
        if (f.text.empty() || r.ec != std::errc() || r.ptr != e)
            fail(row.line, f.column, "expected a non-negative integer, got '" + std::string(f.text) + "'");
        return v;
    }

    std::optional<Provenance> provenance() const {
        const auto h = meta.find("config_hash");
        const auto s = meta.find("seed");
        if (h == meta.end() || s == meta.end()) return std::nullopt;
        Provenance p;
        p.config_hash = h->second;
        const char* b = s->second.data();
        const auto r = std::from_chars(b, b + s->second.size(), p.seed);
        if (r.ec != std::errc()) return std::nullopt;
        return p;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace detail

/// Parses CSV text and checks the header and the field count of every row.
inline CsvTable parse_csv(const std::string& text, std::string path, std::string_view header) {
    CsvTable t;
    t.path = std::move(path);
    const std::string_view src = text;
    std::size_t expected = 1;
    for (char c : header) expected += c == ',';

    bool have_header = false;
    std::size_t pos = 0, line = 0;
    while (pos < src.size()) {
        const std::size_t end = std::min(src.find('\n', pos), src.size());
        std::string_view raw = src.substr(pos, end - pos);
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        pos = end + 1;
        ++line;
        if (detail::trim(raw).empty()) continue;
        if (raw.front() == '#') {
            const std::string_view body = detail::trim(raw.substr(1));
            const auto colon = body.find(':');
            if (colon != std::string_view::npos)
                t.meta[std::string(detail::trim(body.substr(0, colon)))] = std::string(detail::trim(body.substr(colon + 1)));
            continue;
        }
        if (!have_header) {
            if (detail::trim(raw) != header)
                t.fail(line, 1, "expected header '" + std::string(header) + "', got '" + std::string(detail::trim(raw)) + "'");
            have_header = true;
            continue;
        }
        CsvRow row;
        row.line = line;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = raw.find(',', start);
            const std::size_t stop = comma == std::string_view::npos ? raw.size() : comma;
            std::string_view field = raw.substr(start, stop - start);
            std::size_t lead = 0;
            while (lead < field.size() && (field[lead] == ' ' || field[lead] == '\t')) ++lead;
            row.fields.push_back({std::string(detail::trim(field)), start + lead + 1});
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (row.fields.size() != expected) {
            const std::size_t col = row.fields.size() > expected ? row.fields[expected].column : raw.size() + 1;
            t.fail(line, col, "expected " + std::to_string(expected) + " fields, got " + std::to_string(row.fields.size()));
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) t.fail(line == 0 ? 1 : line, 1, "missing header '" + std::string(header) + "'");
    if (t.rows.empty()) t.fail(line, 1, "no data rows");
    return t;
}

inline CsvTable read_csv(const fs::path& path, std::string_view header) {
    return parse_csv(read_file(path), path.string(), header);
}

inline constexpr std::string_view kSeriesHeader = "time_s,value,unit";
inline constexpr std::string_view kDecayHeader = "delay_s,population,shots";
inline constexpr std::string_view kSpectrumHeader = "freq_hz,psd";
inline constexpr std::string_view kAllanHeader = "tau_s,adev,count";
inline constexpr std::string_view kGammaHeader = "rabi_hz,gamma_per_s,gamma_err";

inline std::string preamble(const Provenance& p, const std::map<std::string, std::string>& extra = {}) {
    std::string s = "# config_hash: " + p.config_hash + "\n# seed: " + std::to_string(p.seed) + "\n";
    for (const auto& [k, v] : extra) s += "# " + k + ": " + v + "\n";
    return s;
}

// ---- time series ----

inline std::string series_csv(const TimeSeries& ts, const Provenance& p) {
    std::string s = preamble(p, {{"dt_s", format_number(ts.dt())}});
    s += kSeriesHeader;
    s += '\n';
    const std::string unit(to_string(ts.unit()));
    for (std::size_t i = 0; i < ts.size(); ++i)
        s += format_number(ts.time(i)) + "," + format_number(ts[i]) + "," + unit + "\n";
    return s;
}

/// The sampling step comes from the "# dt_s" comment when present, otherwise
/// from the first two rows; every row must sit on the uniform grid.
inline TimeSeries parse_series(const CsvTable& t) {
    std::vector<double> times, values;
    times.reserve(t.rows.size());
    values.reserve(t.rows.size());
    std::optional<Unit> unit;
    for (const auto& row : t.rows) {
        times.push_back(t.number(row, 0));
        values.push_back(t.number(row, 1));
        Unit u;
        try {
            u = parse_unit(row.fields[2].text);
        } catch (const InvalidInput&) {
            t.fail(row.line, row.fields[2].column, "unknown unit '" + std::string(row.fields[2].text) + "'");
        }
        if (unit && *unit != u) t.fail(row.line, row.fields[2].column, "unit differs from the first row");
        unit = u;
    }
    double dt = 0.0;
    if (const auto it = t.meta.find("dt_s"); it != t.meta.end()) {
        const auto r = std::from_chars(it->second.data(), it->second.data() + it->second.size(), dt);
        if (r.ec != std::errc() || !(dt > 0.0)) t.fail(1, 1, "bad dt_s comment '" + it->second + "'");
    } else {
        if (times.size() < 2) t.fail(t.rows.front().line, 1, "need at least 2 rows to infer dt");
        dt = times[1] - times[0];
    }
    if (!(dt > 0.0)) t.fail(t.rows[1].line, t.rows[1].fields[0].column, "time must be strictly increasing");
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double expect = times[0] + dt * static_cast<double>(i);
        if (std::abs(times[i] - expect) > 1e-6 * dt)
            t.fail(t.rows[i].line, t.rows[i].fields[0].column, "time not on a uniform grid (expected " + format_number(expect) + ")");
    }
    return TimeSeries(std::move(values), dt, *unit, times[0]);
}

inline TimeSeries read_series(const fs::path& path) { return parse_series(read_csv(path, kSeriesHeader)); }

// ---- decay curves ----

inline std::string decay_csv(const DecayCurve& c, const Provenance& p) {
    std::string s = preamble(p);
    s += kDecayHeader;
    s += '\n';
    for (std::size_t i = 0; i < c.size(); ++i)
        s += format_number(c.delays[i]) + "," + format_number(c.populations[i]) + "," + std::to_string(c.shots) + "\n";
    return s;
}

inline DecayCurve parse_decay(const CsvTable& t) {
    DecayCurve c;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const double d = t.number(row, 0);
        if (d < 0.0 || (i > 0 && d <= c.delays.back()))
            t.fail(row.line, row.fields[0].column, "delays must be >= 0 and strictly increasing");
        c.delays.push_back(d);
        c.populations.push_back(t.number(row, 1));
        const std::uint64_t shots = t.count(row, 2);
        if (i > 0 && shots != c.shots) t.fail(row.line, row.fields[2].column, "shots differ from the first row");
        c.shots = shots;
    }
    return c;
}

inline DecayCurve read_decay(const fs::path& path) { return parse_decay(read_csv(path, kDecayHeader)); }

// ---- spectra ----

inline std::string spectrum_csv(const PowerSpectrum& ps, const Provenance& p) {
    std::string s = preamble(p);
    s += kSpectrumHeader;
    s += '\n';
    for (std::size_t i = 0; i < ps.size(); ++i)
        s += format_number(ps.frequencies()[i]) + "," + format_number(ps.psd()[i]) + "\n";
    return s;
}

inline PowerSpectrum parse_spectrum(const CsvTable& t) {
    std::vector<double> f, s;
    for (const auto& row : t.rows) {
        const double fi = t.number(row, 0);
        if (fi <= 0.0 || (!f.empty() && fi <= f.back()))
            t.fail(row.line, row.fields[0].column, "frequencies must be > 0 and strictly increasing");
        const double si = t.number(row, 1);
        if (si < 0.0) t.fail(row.line, row.fields[1].column, "psd must be >= 0");
        f.push_back(fi);
        s.push_back(si);
    }
    return PowerSpectrum(std::move(f), std::move(s));
}

inline PowerSpectrum read_spectrum(const fs::path& path) { return parse_spectrum(read_csv(path, kSpectrumHeader)); }

// ---- Allan curves ----

inline std::string allan_csv(const AllanCurve& a, const Provenance& p) {
    std::string s = preamble(p);
    s += kAllanHeader;
    s += '\n';
    for (std::size_t i = 0; i < a.size(); ++i)
        s += format_number(a.taus()[i]) + "," + format_number(a.adev()[i]) + "," + std::to_string(a.counts()[i]) + "\n";
    return s;
}

inline AllanCurve parse_allan(const CsvTable& t) {
    std::vector<double> tau, adev;
    std::vector<std::size_t> counts;
    for (const auto& row : t.rows) {
        const double ti = t.number(row, 0);
        if (ti <= 0.0 || (!tau.empty() && ti <= tau.back()))
            t.fail(row.line, row.fields[0].column, "tau must be > 0 and strictly increasing");
        const double ai = t.number(row, 1);
        if (ai < 0.0) t.fail(row.line, row.fields[1].column, "adev must be >= 0");
        tau.push_back(ti);
        adev.push_back(ai);
        counts.push_back(static_cast<std::size_t>(t.count(row, 2)));
    }
    return AllanCurve(std::move(tau), std::move(adev), std::move(counts));
}

inline AllanCurve read_allan(const fs::path& path) { return parse_allan(read_csv(path, kAllanHeader)); }

// ---- spin-locking rate tables ----

inline std::string gamma_csv(const std::vector<SpinLockPoint>& pts, const Provenance& p) {
    std::string s = preamble(p);
    s += kGammaHeader;
    s += '\n';
    for (const auto& pt : pts)
        s += format_number(pt.rabi_frequency) + "," + format_number(pt.gamma) + "," + format_number(pt.gamma_err) + "\n";
    return s;
}

inline std::vector<SpinLockPoint> parse_gamma(const CsvTable& t) {
    std::vector<SpinLockPoint> pts;
    for (const auto& row : t.rows) {
        SpinLockPoint pt;
        pt.rabi_frequency = t.number(row, 0);
        if (pt.rabi_frequency <= 0.0) t.fail(row.line, row.fields[0].column, "rabi_hz must be > 0");
        pt.gamma = t.number(row, 1);
        if (pt.gamma <= 0.0) t.fail(row.line, row.fields[1].column, "gamma_per_s must be > 0");
        pt.gamma_err = t.number(row, 2);
        if (pt.gamma_err < 0.0) t.fail(row.line, row.fields[2].column, "gamma_err must be >= 0");
        pts.push_back(pt);
    }
    return pts;
}

inline std::vector<SpinLockPoint> read_gamma(const fs::path& path) { return parse_gamma(read_csv(path, kGammaHeader)); }

} // namespace tlsnoise::io
