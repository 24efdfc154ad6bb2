#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <sstream>
#include <cmath>
#include <numbers>

#include "qphase/estimator_design.hpp"
#include "qphase/limits.hpp"
#include "qphase/quantum_noise.hpp"
#include "qphase/random.hpp"

using namespace qphase;

namespace {

constexpr double pi = std::numbers::pi;

struct Setup {
    TimeGrid grid;
    MessageSpec msg;
    ModulationScheme mod;
    SpectralDensity sm;
    PhaseResponse h;
    SpectralDensity s2;
    double fas; // 4|alpha|^2

    SpectralDensity u() const {
        rvec v(grid.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = signal(k) + s2.values[k];
        return {grid, v};
    }
    SpectralDensity v() const {
        rvec v(grid.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = signal(k);
        return {grid, v};
    }
    double signal(std::size_t k) const {
        return (k == 0 && h.singular_dc) ? 0.0 : fas * sm.values[k] * std::norm(h.values[k]);
    }
    LoopDesign design(std::size_t delay, std::size_t lag = 1) const {
        return design_loop(sm, h, std::sqrt(fas), s2, delay, lag);
    }
};

/// Flat-band setup at coherent-equivalent Lambda; M = 4096, 63 message bins.
Setup flat(ModKind kind, double beta, double lambda, double r = 0.0, std::size_t m = 4096) {
    TimeGrid g(1.0, m);
    MessageSpec msg = MessageSpec::flat_bins(g, 63);
    ModulationScheme mod(kind, beta, msg.bandwidth);
    SpectralDensity sm = effective_message_psd(msg, kind);
    double sm0 = msg.ratio();
    SpectralDensity s2 = r > 0.0 ? squeezed_covariance_psds(NoiseModel::squeezed_z(1.0, r, msg.bandwidth), g).second
                                 : SpectralDensity::constant(g, 1.0);
    double fas = lambda * s2.values[0] / sm0;
    return {g, msg, mod, sm, phase_response(mod, g), s2, fas};
}

double max_abs_diff(const cvec& a, const cvec& b) {
    double w = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) w = std::max(w, std::abs(a[i] - b[i]));
    return w;
}

} // namespace

TEST(OptimumFilter, PmFlatBandValue) {
    auto s = flat(ModKind::PM, 2.0, 100.0);
    auto g = optimum_filter(s.sm, s.h, s.fas, s.s2);
    for (std::size_t k = 0; k < s.grid.size(); ++k) {
        long b = std::labs(s.grid.signed_bin(k));
        if (b <= 31) ASSERT_NEAR(g.response[k].real(), 200.0 / 401.0, 1e-12);
        else ASSERT_EQ(g.response[k], cplx(0.0));
    }
}

TEST(OptimumFilter, ZeroAmplitude) {
    auto s = flat(ModKind::PM, 2.0, 100.0);
    auto g = optimum_filter(s.sm, s.h, 0.0, s.s2);
    for (auto v : g.response) EXPECT_EQ(v, cplx(0.0));
}

TEST(OptimumFilter, SqueezedInBandValue) {
    double r = 0.4, lambda_coh = 50.0, beta = 1.5;
    auto s = flat(ModKind::PM, beta, lambda_coh);
    auto s2 = squeezed_covariance_psds(NoiseModel::squeezed_z(1.0, r, s.msg.bandwidth), s.grid).second;
    auto g = optimum_filter(s.sm, s.h, s.fas, s2);
    double e = std::exp(2.0 * r);
    EXPECT_NEAR(g.response[3].real(), lambda_coh * e * beta / (lambda_coh * e * beta * beta + 1.0), 1e-12);
}

TEST(OptimumFilter, FmDcIsZero) {
    auto s = flat(ModKind::FM, 2.0, 100.0);
    auto g = optimum_filter(s.sm, s.h, s.fas, s.s2);
    EXPECT_EQ(g.response[0], cplx(0.0));
}

TEST(SpectralFactorize, Constant) {
    TimeGrid g(1.0, 64);
    auto x = spectral_factorize(SpectralDensity::constant(g, 4.0));
    for (auto v : x.response) EXPECT_NEAR(std::abs(v - cplx(2.0)), 0.0, 1e-10);
}

TEST(SpectralFactorize, RecoversMinimumPhaseTaps) {
    TimeGrid g(1.0, 256);
    rvec u(256);
    for (std::size_t k = 0; k < 256; ++k) u[k] = std::norm(1.0 + 0.5 * std::polar(1.0, -2.0 * pi * k / 256.0));
    auto x = spectral_factorize({g, u});
    cvec taps = x.taps();
    EXPECT_NEAR(taps[0].real(), 1.0, 1e-8);
    EXPECT_NEAR(taps[1].real(), 0.5, 1e-8);
    for (std::size_t n = 2; n < 256; ++n) ASSERT_LT(std::abs(taps[n]), 1e-8) << n;
    EXPECT_TRUE(x.causal);
}

TEST(SpectralFactorize, RandomSmoothSpectrum) {
    TimeGrid g(1.0, 1024);
    GaussianSource src(99);
    rvec c = src.draw(6);
    rvec u(1024);
    for (std::size_t k = 0; k < 1024; ++k) {
        double w = 2.0 * pi * static_cast<double>(k) / 1024.0, s = 3.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += 0.4 * c[i] * std::cos(static_cast<double>(i + 1) * w);
        u[k] = std::max(s, 0.2);
    }
    // smooth the clipped floor away by squaring a positive trigonometric sum
    for (double& v : u) v = v * v;
    auto x = spectral_factorize({g, u});
    for (std::size_t k = 0; k < 1024; ++k) ASSERT_NEAR(std::norm(x.response[k]) / u[k], 1.0, 1e-8);
    EXPECT_LT(x.anticausal, 1e-8);
    cvec inv(1024);
    for (std::size_t k = 0; k < 1024; ++k) inv[k] = 1.0 / x.response[k];
    EXPECT_LT(anticausal_fraction(inv), 1e-8);
}

TEST(SpectralFactorize, BrickWallDesignSpectrum) {
    auto s = flat(ModKind::PM, 2.0, 100.0);
    auto u = s.u();
    auto x = spectral_factorize(u);
    for (std::size_t k = 0; k < u.values.size(); ++k)
        ASSERT_NEAR(std::norm(x.response[k]) / u.values[k], 1.0, 1e-8) << k;
}

TEST(Levinson, MatchesDenseSolve) {
    GaussianSource src(4);
    std::size_t n = 40;
    rvec t(n), y = src.draw(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(-0.3 * static_cast<double>(i)) * std::cos(0.7 * i);
    t[0] += 0.5;
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd b(n);
    for (std::size_t i = 0; i < n; ++i) {
        b(static_cast<Eigen::Index>(i)) = y[i];
        for (std::size_t j = 0; j < n; ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t[i > j ? i - j : j - i];
    }
    Eigen::VectorXd want = a.ldlt().solve(b);
    rvec got = levinson_solve(t, y);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], want(static_cast<Eigen::Index>(i)), 1e-10);
}

TEST(Levinson, RejectsIndefinite) {
    rvec t{1.0, 2.0, 0.0}, y{1.0, 1.0, 1.0};
    EXPECT_THROW(levinson_solve(t, y), FactorizationError);
}

TEST(ClosedLoopFilter, ZeroSignal) {
    TimeGrid g(1.0, 256);
    auto lp = closed_loop_filter(SpectralDensity::constant(g, 2.0), SpectralDensity::constant(g, 0.0), 1);
    for (auto v : lp.response) EXPECT_EQ(std::abs(v), 0.0);
}

TEST(ClosedLoopFilter, WhiteEqualSpectraGiveOne) {
    TimeGrid g(1.0, 256);
    auto u = SpectralDensity::constant(g, 3.0);
    auto lp = closed_loop_filter(u, u, 0);
    for (auto v : lp.response) EXPECT_NEAR(std::abs(v - cplx(1.0)), 0.0, 1e-12);
}

TEST(ClosedLoopFilter, PmFlatResidualAndTracking) {
    auto s = flat(ModKind::PM, 2.0, 100.0);
    for (std::size_t lag : {0, 1}) {
        auto lp = closed_loop_filter(s.u(), s.v(), lag);
        EXPECT_LT(wiener_hopf_residual(lp, s.u(), s.v(), lag), 1e-6);
        EXPECT_TRUE(lp.causal);
        // in band the loop follows the phase: |1 - L'| is about sqrt(S_2 / U)
        for (std::size_t k = 0; k < lp.response.size(); ++k)
            if (s.sm.values[k] > 0.0) EXPECT_LT(std::abs(1.0 - lp.response[k]), 0.1) << k;
    }
}

TEST(ClosedLoopFilter, CepstralCrossCheckOnSmoothSpectra) {
    // the circular cepstrum is accurate only when log U is smooth; brick-wall spectra leak anticausal taps
    TimeGrid g(1.0, 4096);
    for (double amp : {10.0, 400.0}) {
        for (double fc : {0.02, 0.1}) {
            rvec u(g.size()), v(g.size());
            for (std::size_t k = 0; k < g.size(); ++k) {
                double f = g.frequency(k) / fc;
                v[k] = amp / (1.0 + f * f);
                u[k] = v[k] + 1.0;
            }
            SpectralDensity su(g, u), sv(g, v);
            for (std::size_t lag : {0, 1, 3}) {
                auto a = closed_loop_filter(su, sv, lag);
                auto b = closed_loop_filter_cepstral(su, sv, lag);
                EXPECT_LT(max_abs_diff(a.response, b.response), 1e-5) << amp << " " << fc << " lag " << lag;
            }
        }
    }
}

TEST(LoopDesign, Identities) {
    for (auto kind : {ModKind::PM, ModKind::FM}) {
        auto s = flat(kind, 2.0, 100.0);
        std::size_t d = default_delay(s.msg);
        EXPECT_EQ(d, 8u * 66u);
        auto des = s.design(d);
        double ta = des.two_alpha;
        for (std::size_t k = 0; k < s.grid.size(); ++k) {
            cplx l = des.L.response[k], lp = des.Lprime.response[k];
            ASSERT_NEAR(std::abs(ta * l / (1.0 + ta * l) - lp), 0.0, 1e-8) << k;
            cplx undelay = std::polar(1.0, 2.0 * pi * s.grid.frequency(k) * static_cast<double>(d) * s.grid.spacing());
            ASSERT_NEAR(std::abs(des.Lpostloop.response[k] * lp * undelay - des.G.response[k]), 0.0, 1e-8) << k;
        }
        EXPECT_LT(des.wh_residual, 1e-6);
        EXPECT_TRUE(des.Lprime.causal);
        EXPECT_TRUE(des.L.causal);
    }
}

TEST(LoopDesign, PostLoopTailFollowsSincEstimate) {
    // brick-wall G has a sinc impulse response; energy beyond d samples is about (B/b) / (2 pi^2 d)
    auto s = flat(ModKind::PM, 2.0, 100.0);
    double ratio = s.msg.ratio();
    double prev = 1.0;
    for (std::size_t d : {264, 528, 1024}) {
        double frac = s.design(d).postloop_anticausal;
        double est = ratio / (2.0 * pi * pi * static_cast<double>(d));
        EXPECT_GT(frac, 0.5 * est) << d;
        EXPECT_LT(frac, 2.0 * est) << d;
        EXPECT_LT(frac, prev);
        prev = frac;
    }
}

TEST(LoopDesign, OpenLoop) {
    TimeGrid g(1.0, 64);
    FilterKernel zero(g, cvec(64, 0.0));
    auto d = loop_and_postloop(zero, zero, 1.0, 0);
    for (auto v : d.L.response) EXPECT_EQ(v, cplx(0.0));
    FilterKernel g1(g, cvec(64, 1.0));
    EXPECT_THROW(loop_and_postloop(zero, g1, 1.0, 0), InstabilityError);
    EXPECT_THROW(loop_and_postloop(g1, g1, 1.0, 0), InstabilityError);
}

TEST(LoopDesign, DumpHasOneRowPerBin) {
    auto s = flat(ModKind::PM, 1.0, 30.0, 0.0, 512);
    std::ostringstream os;
    write_design_dump(os, s.design(64));
    std::string text = os.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2 + 512);
}

TEST(ErrorSpectrum, IntegralMatchesIrreducibleError) {
    for (auto kind : {ModKind::PM, ModKind::FM}) {
        auto s = flat(kind, 1.5, 80.0);
        double acc = 0.0;
        for (std::size_t k = 0; k < s.grid.size(); ++k) {
            if (k == 0 && s.h.singular_dc) continue;
            double a = s.fas * s.sm.values[k] * std::norm(s.h.values[k]);
            acc += s.sm.values[k] * s.s2.values[k] / (a + s.s2.values[k]);
        }
        acc /= static_cast<double>(s.grid.size());
        EXPECT_NEAR(irreducible_error(s.sm, s.h, s.fas, s.s2), acc, 1e-10);
    }
}

TEST(ErrorSpectrum, MonotoneInLambda) {
    double prev = 2.0;
    for (double lambda : {1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0}) {
        auto s = flat(ModKind::FM, 1.0, lambda);
        double e = irreducible_error(s.sm, s.h, s.fas, s.s2);
        EXPECT_LE(e, prev);
        prev = e;
    }
}

TEST(LinearizedMap, ZeroInput) {
    auto s = flat(ModKind::PM, 2.0, 100.0, 0.0, 1024);
    auto d = s.design(64);
    for (double v : linearized_map_estimate(d, rvec(1024, 0.0))) EXPECT_EQ(v, 0.0);
    auto g0 = optimum_filter(s.sm, s.h, 0.0, s.s2);
    rvec phi = GaussianSource(1).draw(1024);
    for (double v : apply_response(g0.response, phi)) EXPECT_EQ(v, 0.0);
}

TEST(LinearizedMap, MonteCarloMatchesClosedForm) {
    auto s = flat(ModKind::PM, 2.0, 100.0);
    auto d = s.design(default_delay(s.msg));
    double two_alpha = std::sqrt(s.fas);
    double err = 0.0;
    int trials = 64;
    for (int t = 0; t < trials; ++t) {
        rvec m = sample_message(s.msg, derive_seed(5, 0, t));
        rvec z = GaussianSource(derive_seed(5, 1, t)).draw(m.size());
        rvec phi(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) phi[i] = s.mod.beta * m[i] + z[i] / two_alpha;
        rvec est = linearized_map_estimate(d, phi);
        for (std::size_t i = 0; i < m.size(); ++i) err += (est[i] - m[i]) * (est[i] - m[i]);
    }
    err /= static_cast<double>(trials) * static_cast<double>(s.grid.size());
    EXPECT_NEAR(err * 401.0, 1.0, 0.1);
}

namespace {

/// a_j = |a| exp(i phibar_j) + (x0 + i y0)/2, so 2 Im(a exp(-i phi)) = 2|a| sin(phibar - phi) + noise.
cvec field_record(const rvec& phibar, double alpha, std::uint64_t seed, double noise) {
    auto q = sample_vacuum(TimeGrid(1.0, phibar.size()), seed);
    cvec a(phibar.size());
    for (std::size_t j = 0; j < a.size(); ++j)
        a[j] = alpha * std::polar(1.0, phibar[j]) + noise * 0.5 * cplx(q.x0[j], q.y0[j]);
    return a;
}

} // namespace

TEST(NonlinearMap, NoiselessZeroMessage) {
    auto s = flat(ModKind::PM, 1.0, 30.0, 0.0, 512);
    double ta = std::sqrt(s.fas);
    cvec a = field_record(rvec(512, 0.0), ta / 2.0, 1, 0.0);
    auto res = nonlinear_map_fixed_point(s.sm, s.h, ta, a, rvec(512, 0.0));
    EXPECT_EQ(res.iterations, 1);
    for (double v : res.estimate) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(NonlinearMap, SmallNoiseAgreesWithLinearized) {
    auto s = flat(ModKind::PM, 0.5, 300.0, 0.0, 1024);
    double ta = std::sqrt(s.fas);
    rvec m = sample_message(s.msg, 12);
    rvec phibar = modulate(s.mod, s.grid, m);
    cvec a = field_record(phibar, ta / 2.0, 13, 1.0);
    // linearized observation from the same record: phibar plus the noise quadrature orthogonal to it, over 2|a|
    rvec phi(m.size());
    for (std::size_t j = 0; j < m.size(); ++j)
        phi[j] = phibar[j] + 2.0 * (a[j] * std::polar(1.0, -phibar[j])).imag() / ta;
    auto g = optimum_filter(s.sm, s.h, s.fas, s.s2);
    rvec lin = apply_response(g.response, phi);
    auto res = nonlinear_map_fixed_point(s.sm, s.h, ta, a, lin);
    double diff = 0.0, errn = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
        diff += (res.estimate[j] - lin[j]) * (res.estimate[j] - lin[j]);
        errn += (lin[j] - m[j]) * (lin[j] - m[j]);
    }
    EXPECT_LT(std::sqrt(diff), 0.1 * std::sqrt(errn));
}

TEST(NonlinearMap, AliasedSolutionRanksLower) {
    auto s = flat(ModKind::PM, 3.0, 100.0, 0.0, 512);
    double ta = std::sqrt(s.fas);
    rvec m = sample_message(s.msg, 21);
    cvec a = field_record(modulate(s.mod, s.grid, m), ta / 2.0, 22, 1.0);
    auto near = nonlinear_map_fixed_point(s.sm, s.h, ta, a, m);
    // start a full phase cycle away: the likelihood cannot tell, the prior can
    rvec far(m);
    for (double& v : far) v += 2.0 * pi / s.mod.beta;
    auto alt = nonlinear_map_fixed_point(s.sm, s.h, ta, a, far);
    double lp_near = map_log_posterior(s.sm, s.h, ta, a, near.estimate);
    double lp_far = map_log_posterior(s.sm, s.h, ta, a, alt.estimate);
    EXPECT_GE(lp_near, lp_far);
    double gap = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) gap = std::max(gap, std::abs(near.estimate[j] - alt.estimate[j]));
    if (gap > 1.0) EXPECT_GT(lp_near, lp_far);
}

TEST(NonlinearMap, NonConvergenceCarriesIterate) {
    auto s = flat(ModKind::PM, 1.0, 30.0, 0.0, 512);
    double ta = std::sqrt(s.fas);
    rvec m = sample_message(s.msg, 3);
    cvec a = field_record(modulate(s.mod, s.grid, m), ta / 2.0, 4, 1.0);
    FixedPointOptions opt;
    opt.max_iterations = 2;
    opt.tolerance = 0.0;
    try {
        nonlinear_map_fixed_point(s.sm, s.h, ta, a, rvec(512, 0.0), opt);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.iterations, 2);
        EXPECT_EQ(e.last_iterate.size(), 512u);
    }
}
