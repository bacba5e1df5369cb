#pragma once

// Canonical synthetic records: T1 and qubit-frequency fluctuations of a dry
// (A) and a wet-etched (B) sample, and a resonator quality factor with
// telegraph jumps.

#include <string>
#include <string_view>
#include <vector>

#include "tlsnoise/errors.hpp"
#include "tlsnoise/fluctuators.hpp"
#include "tlsnoise/noise_model.hpp"

namespace tlsnoise {

struct Scenario {
    std::string name;
    ObservableSpec observable;
    std::size_t n = 0;
    double dt = 10.0;  ///< s between repeated measurements
    bool detrend = false; ///< linear detrend before the Welch estimate
};

inline Scenario sample_a_t1() {
    NoiseModel m;
    m.add(White{8e-11});
    m.add(Lorentzian{16e-12, 75e-6});
    m.add(Lorentzian{9e-12, 800e-6});
    return {"sample-a-t1", t1_observable(56e-6, m), 32768, 10.0, false};
}

inline Scenario sample_b_t1() {
    NoiseModel m;
    m.add(White{8e-11});
    m.add(Lorentzian{16e-12, 40e-6});
    return {"sample-b-t1", t1_observable(20e-6, m), 32768, 10.0, false};
}

/// Frequency jumps of ~5 kHz from one slow fluctuator over a white floor.
inline Scenario sample_a_frequency() {
    ObservableSpec spec;
    spec.base = 5.0e9;
    spec.unit = Unit::hertz;
    spec.model.add(White{5e6});
    spec.telegraphs.push_back(symmetric_telegraph(1e-3, -2.5e3, 2.5e3));
    return {"sample-a-frequency", spec, 8192, 10.0, true};
}

/// 6 kHz/h drift on top of an ensemble of fluctuators.
inline Scenario sample_b_frequency() {
    ObservableSpec spec;
    spec.base = 5.0e9;
    spec.unit = Unit::hertz;
    spec.model.add(White{5e6});
    spec.model.add(Drift{6e3 / 3600.0});
    spec.ensemble = EnsembleSpec{40, 1e-5, 5e-2, 1e3, Unit::hertz};
    return {"sample-b-frequency", spec, 8192, 10.0, true};
}

inline Scenario resonator_q() {
    ObservableSpec spec;
    spec.base = 0.0;
    spec.unit = Unit::dimensionless;
    spec.telegraphs.push_back(symmetric_telegraph(2e-3, 3.9e5, 7.2e5));
    return {"resonator-q", spec, 4000, 10.0, false};
}

inline std::vector<std::string> scenario_names() {
    return {"sample-a-t1", "sample-b-t1", "sample-a-frequency", "sample-b-frequency", "resonator-q"};
}

inline Scenario scenario_by_name(std::string_view name) {
    if (name == "sample-a-t1") return sample_a_t1();
    if (name == "sample-b-t1") return sample_b_t1();
    if (name == "sample-a-frequency") return sample_a_frequency();
    if (name == "sample-b-frequency") return sample_b_frequency();
    if (name == "resonator-q") return resonator_q();
    throw InvalidInput("unknown scenario '" + std::string(name) + "'");
}

} // namespace tlsnoise
