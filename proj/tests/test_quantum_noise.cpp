#include <gtest/gtest.h>

#include <cmath>

#include "qphase/quantum_noise.hpp"
#include "qphase/signal_model.hpp"

using namespace qphase;

namespace {

double mean(const rvec& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double cov(const rvec& a, const rvec& b) {
    double ma = mean(a), mb = mean(b), s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(a.size());
}

rvec lowpass(const rvec& x, const TimeGrid& g, double width) {
    rvec w = band_weights(g, width);
    cvec X = fft(std::span<const double>(x));
    for (std::size_t k = 0; k < X.size(); ++k) X[k] *= w[k];
    return ifft_real(X);
}

} // namespace

TEST(NoiseModel, Invariants) {
    EXPECT_THROW(NoiseModel(NoiseKind::Coherent, 1.0, 0.5, 0.0), ConfigError);
    EXPECT_THROW(NoiseModel::squeezed_z(1.0, 0.5, 0.0), ConfigError);
    EXPECT_THROW(NoiseModel::coherent(-1.0), ConfigError);
    EXPECT_THROW(NoiseModel::squeezed_z(1.0, -0.1, 0.5), ConfigError);
    TimeGrid g(1.0, 64);
    EXPECT_THROW(squeezed_covariance_psds(NoiseModel::squeezed_z(1.0, 0.5, 2.0), g), ConfigError);
}

TEST(SampleVacuum, DeterministicAndWhite) {
    TimeGrid g(1.0, 1 << 20);
    auto a = sample_vacuum(g, 17), b = sample_vacuum(g, 17);
    EXPECT_EQ(a.x0, b.x0);
    EXPECT_EQ(a.y0, b.y0);
    double n = static_cast<double>(g.size());
    EXPECT_NEAR(cov(a.x0, a.x0), 1.0, 0.01);
    EXPECT_NEAR(cov(a.y0, a.y0), 1.0, 0.01);
    EXPECT_LT(std::abs(cov(a.x0, a.y0)), 3.0 / std::sqrt(n));
    auto psd = estimate_psd(TimeGrid(1.0, 1024), a.x0, 1024);
    // 1024 segments per bin: 5 sigma is 5 / sqrt(1024)
    for (double v : psd.values) EXPECT_NEAR(v, 1.0, 5.0 / 32.0);
    EXPECT_NEAR(psd.bin_mean(), 1.0, 0.01);
}

TEST(SampleVacuum, RotationInvariant) {
    TimeGrid g(1.0, 1 << 18);
    auto q = sample_vacuum(g, 3);
    double n = static_cast<double>(g.size());
    for (double th : {0.3, 1.1, 2.5}) {
        rvec z(g.size()), w(g.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] = q.x0[i] * std::sin(th) + q.y0[i] * std::cos(th);
            w[i] = q.x0[i] * std::cos(th) - q.y0[i] * std::sin(th);
        }
        // var of a unit Gaussian sample variance is 2/n
        EXPECT_LT(std::abs(cov(z, z) - 1.0), 3.0 * std::sqrt(2.0 / n));
        EXPECT_LT(std::abs(cov(z, w)), 3.0 / std::sqrt(n));
    }
}

TEST(SqueezedPsds, NoSqueezing) {
    TimeGrid g(1.0, 64);
    auto [s1, s2] = squeezed_covariance_psds(NoiseModel::squeezed_z(1.0, 0.0, 0.5), g);
    for (std::size_t k = 0; k < 64; ++k) {
        EXPECT_DOUBLE_EQ(s1.values[k], 1.0);
        EXPECT_DOUBLE_EQ(s2.values[k], 1.0);
    }
}

TEST(SqueezedPsds, FullBand) {
    TimeGrid g(1.0, 64);
    auto s2 = squeezed_covariance_psds(NoiseModel::squeezed_z(1.0, 0.5, 1.0), g).second;
    for (double v : s2.values) EXPECT_NEAR(v, 0.36787944117144233, 1e-15);
}

TEST(SqueezedPsds, QuarterBand) {
    TimeGrid g(1.0, 256);
    auto s1 = squeezed_covariance_psds(NoiseModel::squeezed_z(1.0, 1.0, 0.25), g).first;
    for (std::size_t k = 0; k < 256; ++k) {
        double f = std::abs(g.frequency(k));
        if (f < 0.125) EXPECT_NEAR(s1.values[k], std::exp(2.0), 1e-12);
        if (f > 0.125) EXPECT_EQ(s1.values[k], 1.0);
    }
}

TEST(SqueezedPsds, UncertaintyFloor) {
    TimeGrid g(1.0, 512);
    for (double r : {0.0, 0.3, 1.0, 2.0}) {
        // odd bin count: no half-weight edge bins
        auto [s1, s2] = squeezed_covariance_psds(NoiseModel::squeezed_z(1.0, r, 31.0 * g.bin_width()), g);
        for (std::size_t k = 0; k < 512; ++k) ASSERT_NEAR(s1.values[k] * s2.values[k], 1.0, 1e-12);
    }
}

TEST(SampleSqueezed, ZeroSqueezeIsVacuum) {
    TimeGrid g(1.0, 1024);
    auto v = sample_vacuum(g, 5);
    auto s = sample_squeezed(NoiseModel::squeezed_z(1.0, 0.0, 0.25), g, 5);
    for (std::size_t i = 0; i < 1024; ++i) {
        ASSERT_NEAR(s.x0[i], v.x0[i], 1e-12);
        ASSERT_NEAR(s.y0[i], v.y0[i], 1e-12);
    }
}

TEST(SampleSqueezed, FullBandVariance) {
    TimeGrid g(1.0, 1 << 18);
    auto s = sample_squeezed(NoiseModel::squeezed_z(1.0, 0.5, 1.0), g, 21);
    EXPECT_NEAR(cov(s.y0, s.y0) / std::exp(-1.0), 1.0, 0.05);
    EXPECT_NEAR(cov(s.x0, s.x0) / std::exp(1.0), 1.0, 0.05);
}

TEST(SampleSqueezed, FilteredRatio) {
    TimeGrid g(1.0, 1 << 17);
    double bs = g.bandwidth() / 8.0, b = g.bandwidth() / 32.0;
    for (double r : {0.25, 0.5}) {
        auto s = sample_squeezed(NoiseModel::squeezed_z(1.0, r, bs), g, 8);
        rvec lx = lowpass(s.x0, g, b), ly = lowpass(s.y0, g, b);
        EXPECT_NEAR(cov(ly, ly) / cov(lx, lx) / std::exp(-4.0 * r), 1.0, 0.1) << r;
    }
}

TEST(SampleSqueezed, DisjointSeedsUncorrelated) {
    TimeGrid g(1.0, 1 << 16);
    auto model = NoiseModel::squeezed_z(1.0, 0.5, 1.0);
    auto a = sample_squeezed(model, g, 1), b = sample_squeezed(model, g, 2);
    double n = static_cast<double>(g.size());
    double se = std::sqrt(std::exp(1.0) * std::exp(1.0) / n);
    EXPECT_LT(std::abs(cov(a.x0, b.x0)), 3.0 * se);
}

TEST(Lambda, Values) {
    EXPECT_DOUBLE_EQ(lambda_from_budget(10.0, 0.0), 40.0);
    double r = 0.5 * std::log(21.0);
    EXPECT_NEAR(lambda_from_budget(10.0, r), 4.0 * (10.0 - 100.0 / 21.0) * 21.0, 1e-9);
    EXPECT_NEAR(lambda_from_budget(10.0, r), 440.0, 1e-9);
    EXPECT_THROW(lambda_from_budget(1.0, 2.0), DomainError);
    EXPECT_DOUBLE_EQ(lambda_parameter(NoiseModel::coherent(2.0), 3.0), 48.0);
}

TEST(PhotonBudget, Accounting) {
    PhysicalConstants pc;
    double q = pc.h * pc.f0;
    auto p0 = photon_budget(2.0, 0.0, 1e3, 10.0, 10.0, pc);
    EXPECT_NEAR(p0.power, q * 1e3 * 4.0, 1e-30);
    auto p1 = photon_budget(0.0, 0.7, 1e3, 10.0, 10.0, pc);
    EXPECT_NEAR(p1.power / (q * 10.0 * std::sinh(0.7) * std::sinh(0.7)), 1.0, 1e-12);
    EXPECT_NEAR(p1.n_photon, std::sinh(0.7) * std::sinh(0.7), 1e-12);
}

TEST(PhotonBudget, RoundTripThroughLambda) {
    // B_s = b: N from (alpha, r), then Lambda from N equals 4 alpha^2 S_m(0) e^{2r} with S_m(0) = B/b
    double bw = 1.0, b = 1.0 / 64.0, r = 0.6, alpha = 0.3;
    auto pb = photon_budget(alpha, r, bw, b, b);
    double sm0 = bw / b;
    double direct = lambda_parameter(NoiseModel::squeezed_z(alpha, r, b), sm0);
    EXPECT_NEAR(lambda_from_budget(pb.n_photon, r), direct, 1e-10 * direct);
    EXPECT_NEAR(alpha_sq_from_budget(pb.n_photon, r, bw, b), alpha * alpha, 1e-14);
}
