#include <cmath>
#include <gtest/gtest.h>
#include <vector>

#include "test_support.hpp"
#include "tlsnoise/model_allan.hpp"
#include "tlsnoise/noise_model.hpp"

using namespace tlsnoise;

TEST(ModelPsd, WhiteIsFlat) {
    NoiseModel m;
    m.add(White{2.0});
    const std::vector<double> f{1.0, 10.0, 100.0};
    const auto s = model_psd(m, f);
    for (double v : s.psd()) EXPECT_DOUBLE_EQ(v, 2.0);
}

TEST(ModelPsd, OneOverFDecadeRatio) {
    NoiseModel m;
    m.add(OneOverF{1.0, 1.0});
    const std::vector<double> f{10.0, 100.0};
    const auto s = model_psd(m, f);
    EXPECT_NEAR(s.psd()[0] / s.psd()[1], 10.0, 1e-12);
}

TEST(ModelPsd, LorentzianIntegratesToTotalPower) {
    const double power = 3.7, fc = 2e-3;
    NoiseModel m;
    m.add(Lorentzian{power, fc});
    // Trapezoid on a log grid from fc*1e-8 to fc*1e8 plus analytic tails.
    const auto f = logspace(fc * 1e-8, fc * 1e8, 200001);
    const auto s = model_psd(m, f);
    double integral = 0.0;
    for (std::size_t i = 1; i < f.size(); ++i) integral += 0.5 * (s.psd()[i] + s.psd()[i - 1]) * (f[i] - f[i - 1]);
    integral += s.psd().front() * f.front();                 // flat below
    integral += (2.0 * power / M_PI) * fc / f.back();        // 1/f^2 above
    EXPECT_NEAR(integral / power, 1.0, 1e-3);
}

TEST(ModelPsd, Additive) {
    NoiseModel a, b;
    a.add(White{0.3});
    a.add(Lorentzian{1.5, 0.01});
    b.add(OneOverF{0.2, 0.8});
    b.add(Lorentzian{0.7, 3.0});
    const auto f = logspace(1e-3, 1e3, 61);
    const auto sa = model_psd(a, f), sb = model_psd(b, f), sab = model_psd(a.merged(b), f);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(sab.psd()[i], sa.psd()[i] + sb.psd()[i]);
}

TEST(ModelPsd, DriftContributesNothing) {
    NoiseModel m;
    m.add(Drift{5.0});
    const std::vector<double> f{0.1, 1.0};
    const auto s = model_psd(m, f);
    for (double v : s.psd()) EXPECT_EQ(v, 0.0);
}

TEST(ModelPsd, RejectsBadGrid) {
    NoiseModel m;
    m.add(White{1.0});
    EXPECT_THROW(model_psd(m, std::vector<double>{}), InvalidInput);
    EXPECT_THROW(model_psd(m, std::vector<double>{0.0, 1.0}), InvalidInput);
    EXPECT_THROW(model_psd(m, std::vector<double>{2.0, 1.0}), InvalidInput);
}

TEST(NoiseModel, ComponentInvariants) {
    NoiseModel m;
    EXPECT_THROW(m.add(White{-1.0}), InvalidInput);
    EXPECT_THROW(m.add(OneOverF{1.0, 0.4}), InvalidInput);
    EXPECT_THROW(m.add(OneOverF{1.0, 1.6}), InvalidInput);
    EXPECT_THROW(m.add(Lorentzian{1.0, 0.0}), InvalidInput);
    EXPECT_THROW(m.add(Lorentzian{-1.0, 1.0}), InvalidInput);
    m.add(White{1.0});
    EXPECT_THROW(m.add(White{2.0}), InvalidInput);
    m.add(Drift{1.0});
    EXPECT_THROW(m.add(Drift{2.0}), InvalidInput);
}

TEST(NoiseModel, TelegraphMapping) {
    const auto l = telegraph_lorentzian(M_PI * 2e-3, M_PI * 2e-3, -1.5, 1.5);
    EXPECT_NEAR(l.corner_frequency, 2e-3, 1e-15);
    EXPECT_NEAR(l.total_power, 2.25, 1e-12);
}

TEST(ComponentBandPower, MatchesQuadrature) {
    const std::vector<NoiseComponent> comps{White{0.5}, OneOverF{2.0, 1.0}, OneOverF{2.0, 0.7},
                                            Lorentzian{1.2, 0.03}};
    for (const auto& c : comps) {
        const auto f = logspace(1e-3, 1.0, 100001);
        double q = 0.0;
        for (std::size_t i = 1; i < f.size(); ++i)
            q += 0.5 * (component_psd(c, f[i]) + component_psd(c, f[i - 1])) * (f[i] - f[i - 1]);
        EXPECT_NEAR(component_band_power(c, 1e-3, 1.0) / q, 1.0, 1e-6) << component_name(c);
    }
}

TEST(ModelAllan, WhiteClosedForm) {
    const double h0 = 3e-4;
    NoiseModel m;
    m.add(White{h0});
    const auto taus = logspace(1.0, 1000.0, 13);
    const auto a = model_allan(m, taus);
    for (std::size_t i = 0; i < taus.size(); ++i)
        EXPECT_NEAR(a.adev()[i] / std::sqrt(h0 / (2.0 * taus[i])), 1.0, 1e-2);
    EXPECT_NEAR(oracle::loglog_slope(a.taus(), a.adev()), -0.5, 0.01);
}

TEST(ModelAllan, FlickerClosedForm) {
    const double h1 = 7.0;
    NoiseModel m;
    m.add(OneOverF{h1, 1.0});
    const auto taus = logspace(0.1, 10.0, 9);
    const auto a = model_allan(m, taus);
    const double expected = std::sqrt(2.0 * std::log(2.0) * h1);
    double lo = 1e300, hi = 0.0;
    for (double v : a.adev()) {
        EXPECT_NEAR(v / expected, 1.0, 1e-2);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    EXPECT_LT(hi / lo - 1.0, 0.02);
}

TEST(ModelAllan, LorentzianClosedFormAndSinglePeak) {
    const double power = 2.0, fc = 75e-6;
    NoiseModel m;
    m.add(Lorentzian{power, fc});
    const auto taus = logspace(10.0, 1e6, 41);
    const auto a = model_allan(m, taus);
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double exact = std::sqrt(oracle::lorentzian_allan_variance(power, fc, taus[i]));
        EXPECT_NEAR(a.adev()[i] / exact, 1.0, 1e-2) << "tau=" << taus[i];
    }
    int maxima = 0;
    for (std::size_t i = 1; i + 1 < taus.size(); ++i)
        if (a.adev()[i] > a.adev()[i - 1] && a.adev()[i] > a.adev()[i + 1]) ++maxima;
    EXPECT_EQ(maxima, 1);
}

TEST(ModelAllan, DriftAddsLinearTerm) {
    NoiseModel m;
    m.add(Drift{0.5});
    const std::vector<double> taus{1.0, 10.0};
    const auto a = model_allan(m, taus);
    EXPECT_NEAR(a.adev()[0], 0.5 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(a.adev()[1], 5.0 / std::sqrt(2.0), 1e-12);
}

TEST(ModelAllan, PeakProductScaleInvariant) {
    // Locate the peak of the closed-form curve for several corners.
    const auto& k = AllanKernels::instance();
    for (double fc : {40e-6, 2e-3, 5e3}) {
        double best_tau = 0.0, best = -1.0;
        for (double t : logspace(0.01 / fc, 10.0 / fc, 20001)) {
            const double v = oracle::lorentzian_allan_variance(1.0, fc, t);
            if (v > best) {
                best = v;
                best_tau = t;
            }
        }
        EXPECT_NEAR(best_tau * fc / k.lorentzian_peak_product(), 1.0, 1e-2) << fc;
        EXPECT_NEAR(allan_peak_tau(Lorentzian{1.0, fc}) * fc, k.lorentzian_peak_product(), 1e-12);
    }
}

TEST(ModelAllan, FastKernelsMatchQuadrature) {
    NoiseModel m;
    m.add(White{0.1});
    m.add(OneOverF{0.5, 0.8});
    m.add(Lorentzian{2.0, 0.01});
    m.add(Drift{0.001});
    const auto taus = logspace(1.0, 1e4, 17);
    const auto slow = model_allan(m, taus);
    const auto fast = model_allan_fast(m, taus);
    for (std::size_t i = 0; i < taus.size(); ++i) EXPECT_NEAR(fast.adev()[i] / slow.adev()[i], 1.0, 2e-3);
}

TEST(ModelAllan, NonConvergenceIsNumericalError) {
    AllanQuadratureOptions opt;
    opt.max_refinements = 0;
    opt.relative_tolerance = 1e-15;
    NoiseModel m;
    m.add(Lorentzian{1.0, 1.0});
    const std::vector<double> taus{1.0};
    EXPECT_THROW(model_allan(m, taus, opt), NumericalError);
}

TEST(ModelAllan, RejectsBadTaus) {
    NoiseModel m;
    m.add(White{1.0});
    EXPECT_THROW(model_allan(m, std::vector<double>{1.0, 1.0}), InvalidInput);
    EXPECT_THROW(model_allan(m, std::vector<double>{-1.0}), InvalidInput);
}
