#include <cmath>
#include <gtest/gtest.h>
#include <vector>

#include "tlsnoise/decay_fit.hpp"
#include "tlsnoise/ramsey.hpp"

using namespace tlsnoise;

namespace {

QubitSpec qubit(double t1, double t2) { return QubitSpec{5e9, t1, t2}; }

DecayCurve scaled(const DecayCurve& c, double k) {
    DecayCurve out = c;
    for (double& d : out.delays) d *= k;
    return out;
}

// Ramsey record used for beat fits: 1 MHz drive offset keeps both tones on
// one side of zero for |delta| up to 200 kHz.
struct BeatSetup {
    QubitSpec q = QubitSpec{5e9, 200e-6, 300e-6};
    double drive = 1e6;
    std::vector<double> delays = linspace(0.0, 400e-6, 2001);
};

} // namespace

TEST(FitExponential, NoiselessRoundTrip) {
    const auto q = qubit(20e-6, 20e-6);
    const auto c = sim_relaxation(q, linspace(0.0, 100e-6, 41), kIdealShots, 1);
    const auto f = fit_exponential(c);
    EXPECT_NEAR(f.t1 / 20e-6, 1.0, 1e-3);
    EXPECT_NEAR(f.amplitude, 1.0, 1e-6);
    EXPECT_NEAR(f.offset, 0.0, 1e-6);
    EXPECT_LT(f.rms_residual, 1e-6);
}

TEST(FitExponential, ThousandShots) {
    const auto q = qubit(20e-6, 20e-6);
    int ok = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto f = fit_exponential(sim_relaxation(q, linspace(0.0, 100e-6, 41), std::uint64_t{1000}, s));
        if (std::abs(f.t1 / 20e-6 - 1.0) <= 0.05) ++ok;
        EXPECT_GT(f.t1_stderr, 0.0);
    }
    EXPECT_GE(ok, 19);
}

TEST(FitExponential, ConstantCurveFails) {
    DecayCurve c;
    c.delays = linspace(0.0, 1e-4, 20);
    c.populations.assign(20, 0.7);
    EXPECT_THROW(fit_exponential(c), FitFailure);
}

TEST(FitExponential, TooFewPoints) {
    const auto c = sim_relaxation(qubit(20e-6, 20e-6), linspace(0.0, 50e-6, 4), kIdealShots, 1);
    EXPECT_THROW(fit_exponential(c), InvalidInput);
}

TEST(FitExponential, ScaleEquivariant) {
    const auto c = sim_relaxation(qubit(37e-6, 20e-6), linspace(0.0, 150e-6, 31), std::uint64_t{500}, 4);
    const auto base = fit_exponential(c);
    for (double k : {1e-3, 0.5, 7.0, 1e4}) {
        const auto f = fit_exponential(scaled(c, k));
        EXPECT_NEAR(f.t1 / (k * base.t1), 1.0, 1e-9) << k;
        EXPECT_NEAR(f.amplitude / base.amplitude, 1.0, 1e-9) << k;
    }
}

TEST(FitRamsey, SingleToneT2WithShots) {
    const auto q = qubit(30e-6, 14e-6);
    int ok = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto c = sim_ramsey(q, 300e3, std::nullopt, linspace(0.0, 50e-6, 201), std::uint64_t{1000}, s);
        const auto f = fit_ramsey(c);
        if (std::abs(f.t2 / 14e-6 - 1.0) <= 0.05) ++ok;
        EXPECT_NEAR(f.frequency_offset / 300e3, 1.0, 0.01);
    }
    EXPECT_GE(ok, 19);
}

TEST(FitRamsey, NoiselessExact) {
    const auto q = qubit(30e-6, 14e-6);
    const auto f = fit_ramsey(sim_ramsey(q, 150e3, std::nullopt, linspace(0.0, 50e-6, 201), kIdealShots, 1));
    EXPECT_NEAR(f.t2 / 14e-6, 1.0, 1e-6);
    EXPECT_NEAR(f.frequency_offset / 150e3, 1.0, 1e-8);
    EXPECT_NEAR(f.amplitude, 0.5, 1e-6);
    EXPECT_NEAR(f.offset, 0.5, 1e-6);
}

TEST(FitRamsey, ScaleEquivariant) {
    const auto q = qubit(30e-6, 14e-6);
    const auto c = sim_ramsey(q, 200e3, std::nullopt, linspace(0.0, 50e-6, 201), std::uint64_t{800}, 9);
    const auto base = fit_ramsey(c);
    for (double k : {1e-2, 3.0, 1e3}) {
        const auto f = fit_ramsey(scaled(c, k));
        EXPECT_NEAR(f.t2 / (k * base.t2), 1.0, 1e-9) << k;
        EXPECT_NEAR(f.frequency_offset * k / base.frequency_offset, 1.0, 1e-9) << k;
    }
}

TEST(FitRamseyBeats, RoundTripIdeal) {
    BeatSetup b;
    const auto c = sim_ramsey(b.q, b.drive, TlsCoupling{54e3, 26e3, std::nullopt}, b.delays, kIdealShots, 1);
    const auto f = fit_ramsey_beats(c);
    EXPECT_NEAR(f.g / 26e3, 1.0, 0.02);
    EXPECT_NEAR(f.detuning / 54e3, 1.0, 0.02);
    EXPECT_NEAR((f.tone_frequencies[1] - f.tone_frequencies[0]) / std::sqrt(54e3 * 54e3 + 4 * 26e3 * 26e3), 1.0,
                0.01);
    EXPECT_NEAR(f.t2 / 300e-6, 1.0, 0.02);
}

TEST(FitRamseyBeats, RoundTripThousandShots) {
    BeatSetup b;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto c =
            sim_ramsey(b.q, b.drive, TlsCoupling{54e3, 26e3, std::nullopt}, b.delays, std::uint64_t{1000}, seed);
        const auto f = fit_ramsey_beats(c);
        EXPECT_NEAR(f.g / 26e3, 1.0, 0.05) << seed;
        EXPECT_NEAR(f.detuning / 54e3, 1.0, 0.05) << seed;
        EXPECT_GT(f.g_stderr, 0.0);
    }
}

TEST(FitRamseyBeats, NoTlsIsAmbiguousOrZero) {
    BeatSetup b;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto c = sim_ramsey(b.q, b.drive, std::nullopt, b.delays, std::uint64_t{1000}, seed);
        try {
            const auto f = fit_ramsey_beats(c);
            EXPECT_LE(f.g, 2.0 * f.g_stderr) << seed;
        } catch (const AmbiguityError&) {
            SUCCEED();
        }
    }
}

TEST(FitRamseyBeats, PropertySweep) {
    BeatSetup b;
    for (double g : {5e3, 20e3, 50e3, 100e3}) {
        for (double delta : {0.0, 30e3, 90e3, 200e3}) {
            const auto c = sim_ramsey(b.q, b.drive, TlsCoupling{delta, g, std::nullopt}, b.delays, kIdealShots, 1);
            const auto f = fit_ramsey_beats(c);
            EXPECT_NEAR(f.g / g, 1.0, 0.05) << "g=" << g << " delta=" << delta;
            if (delta > 0.0) EXPECT_NEAR(f.detuning / delta, 1.0, 0.05) << "g=" << g << " delta=" << delta;
            else EXPECT_LT(f.detuning, 0.05 * g) << "g=" << g;
        }
    }
}

TEST(FitRamseyBeats, SignOfDetuningNotRecoverable) {
    BeatSetup b;
    const auto pos = fit_ramsey_beats(sim_ramsey(b.q, b.drive, TlsCoupling{54e3, 26e3, {}}, b.delays, kIdealShots, 1));
    const auto neg = fit_ramsey_beats(sim_ramsey(b.q, b.drive, TlsCoupling{-54e3, 26e3, {}}, b.delays, kIdealShots, 1));
    EXPECT_NEAR(pos.detuning, neg.detuning, 0.01 * pos.detuning);
    EXPECT_GT(neg.detuning, 0.0);
}
