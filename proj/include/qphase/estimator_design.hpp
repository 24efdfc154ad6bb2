#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>

#include "errors.hpp"
#include "fft.hpp"
#include "limits.hpp"
#include "sampled_field.hpp"
#include "signal_model.hpp"

namespace qphase {

/// Fraction of tap energy at negative lags (indices M/2..M-1 of the inverse DFT).
inline double anticausal_fraction(std::span<const cplx> response) {
    cvec taps = ifft(response);
    std::size_t m = taps.size();
    double total = 0.0, neg = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
        double e = std::norm(taps[n]);
        total += e;
        if (n >= (m + 1) / 2) neg += e;
    }
    return total > 0.0 ? neg / total : 0.0;
}

inline constexpr double causal_tolerance = 1e-8;

/// Frequency response on a grid plus a causality flag.
struct FilterKernel {
    FilterKernel() = default;
    FilterKernel(TimeGrid g, cvec r) : grid(g), response(std::move(r)) {
        if (response.size() != grid.size()) throw ConfigError("filter length does not match grid");
        anticausal = anticausal_fraction(response);
        causal = anticausal < causal_tolerance;
    }

    cvec taps() const { return ifft(response); }
    std::size_t size() const { return response.size(); }

    TimeGrid grid;
    cvec response;
    double anticausal = 0.0;
    bool causal = false;
};

/// G = 4|a|^2 S_m H* / (4|a|^2 S_m |H|^2 + S_2).
inline FilterKernel optimum_filter(const SpectralDensity& sm, const PhaseResponse& h, double four_alpha_sq,
                                   const SpectralDensity& s2) {
    std::size_t m = sm.values.size();
    cvec g(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        if (k == 0 && h.singular_dc) continue;
        if (!(s2.values[k] > 0.0)) throw DomainError("S2 must be positive on every bin");
        double a = four_alpha_sq * sm.values[k];
        g[k] = a * std::conj(h.values[k]) / (a * std::norm(h.values[k]) + s2.values[k]);
    }
    return {sm.grid, std::move(g)};
}

inline constexpr double factorization_floor = 1e-12;

/**
 * Minimum-phase X with |X|^2 = U via the real cepstrum.
 *
 * Bins below 1e-12 max(U) are raised to that floor before the logarithm; other bins are untouched.
 */
inline FilterKernel spectral_factorize(const SpectralDensity& u) {
    std::size_t m = u.values.size();
    double umax = *std::max_element(u.values.begin(), u.values.end());
    if (!(umax > 0.0)) throw FactorizationError("spectrum is identically zero");
    double eps = factorization_floor * umax;
    cvec logu(m);
    for (std::size_t k = 0; k < m; ++k) {
        double v = std::max(u.values[k], eps);
        if (!(v > 0.0)) throw FactorizationError("nonpositive spectrum bin after flooring");
        logu[k] = 0.5 * std::log(v);
    }
    cvec c = ifft(logu);
    cvec folded(m, 0.0);
    folded[0] = c[0].real();
    if (m > 1) {
        for (std::size_t n = 1; n < m / 2; ++n) folded[n] = 2.0 * c[n].real();
        folded[m / 2] = c[m / 2].real();
    }
    cvec x = fft(folded);
    for (auto& v : x) v = std::exp(v);
    return {u.grid, std::move(x)};
}

/**
 * Solves T x = y for symmetric positive-definite Toeplitz T with first column t.
 * Levinson recursion, O(n^2).
 */
inline rvec levinson_solve(std::span<const double> t, std::span<const double> y) {
    std::size_t n = y.size();
    if (t.size() < n) throw ConfigError("toeplitz column shorter than right-hand side");
    if (n == 0) return {};
    double t0 = t[0];
    if (!(t0 > 0.0)) throw FactorizationError("toeplitz diagonal must be positive");
    rvec r(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = i + 1 < n ? t[i + 1] / t0 : 0.0;
        b[i] = y[i] / t0;
    }
    rvec x(n, 0.0), v(n, 0.0), z(n, 0.0);
    x[0] = b[0];
    if (n == 1) return x;
    v[0] = -r[0];
    double beta = 1.0, alpha = -r[0];
    for (std::size_t k = 1; k < n; ++k) {
        beta *= (1.0 - alpha * alpha);
        if (!(beta > 0.0)) throw FactorizationError("toeplitz system is not positive definite");
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += r[i] * x[k - 1 - i];
        double mu = (b[k] - acc) / beta;
        for (std::size_t i = 0; i < k; ++i) x[i] += mu * v[k - 1 - i];
        x[k] = mu;
        if (k + 1 < n) {
            acc = 0.0;
            for (std::size_t i = 0; i < k; ++i) acc += r[i] * v[k - 1 - i];
            alpha = (-r[k] - acc) / beta;
            for (std::size_t i = 0; i < k; ++i) z[i] = v[i] + alpha * v[k - 1 - i];
            std::copy(z.begin(), z.begin() + static_cast<long>(k), v.begin());
            v[k] = alpha;
        }
    }
    return x;
}

/// Circular autocorrelation sequence (real part of the inverse DFT) of a real even spectrum.
inline rvec autocorrelation(const SpectralDensity& s) {
    cvec c(s.values.begin(), s.values.end());
    return ifft_real(c);
}

/**
 * Causal Wiener-Hopf solution L' supported on lags [lag, taps).
 *
 * Solves sum_k L'_k u_{j-k} = v_j for j in [lag, taps) with u, v the circular
 * autocorrelations of U and V. taps defaults to M/2.
 */
inline FilterKernel closed_loop_filter(const SpectralDensity& u, const SpectralDensity& v, std::size_t lag = 0,
                                       std::optional<std::size_t> taps = std::nullopt) {
    std::size_t m = u.values.size();
    std::size_t n = taps.value_or(m / 2 == 0 ? 1 : m / 2);
    if (n > m / 2 + (m == 1 ? 1 : 0) || lag >= n) throw ConfigError("invalid closed-loop filter support");
    rvec uc = autocorrelation(u), vc = autocorrelation(v);
    std::size_t len = n - lag;
    rvec col(uc.begin(), uc.begin() + static_cast<long>(len));
    rvec rhs(vc.begin() + static_cast<long>(lag), vc.begin() + static_cast<long>(n));
    rvec sol = levinson_solve(col, rhs);
    rvec h(m, 0.0);
    for (std::size_t i = 0; i < len; ++i) h[lag + i] = sol[i];
    return {u.grid, fft(std::span<const double>(h))};
}

/// Cepstral route: L' = (1/X) [V / X*]_{>= lag}. Independent cross-check of closed_loop_filter.
inline FilterKernel closed_loop_filter_cepstral(const SpectralDensity& u, const SpectralDensity& v,
                                                std::size_t lag = 0) {
    FilterKernel x = spectral_factorize(u);
    std::size_t m = u.values.size();
    cvec q(m);
    for (std::size_t k = 0; k < m; ++k) q[k] = v.values[k] / std::conj(x.response[k]);
    cvec qt = ifft(q);
    for (std::size_t nidx = 0; nidx < m; ++nidx)
        if (nidx < lag || nidx >= m / 2) qt[nidx] = 0.0;
    cvec qp = fft(qt);
    for (std::size_t k = 0; k < m; ++k) qp[k] /= x.response[k];
    return {u.grid, std::move(qp)};
}

/**
 * Max |sum_k L'_k u_{j-k} - v_j| over j in [lag, taps), relative to max |v|
 * (absolute when v vanishes).
 */
inline double wiener_hopf_residual(const FilterKernel& lp, const SpectralDensity& u, const SpectralDensity& v,
                                   std::size_t lag = 0, std::optional<std::size_t> taps = std::nullopt) {
    std::size_t m = u.values.size();
    std::size_t n = taps.value_or(std::max<std::size_t>(1, m / 2));
    cvec r(m);
    for (std::size_t k = 0; k < m; ++k) r[k] = lp.response[k] * u.values[k] - v.values[k];
    rvec rt = ifft_real(r);
    rvec vc = autocorrelation(v);
    double scale = 0.0;
    for (double x : vc) scale = std::max(scale, std::abs(x));
    double worst = 0.0;
    for (std::size_t j = lag; j < n; ++j) worst = std::max(worst, std::abs(rt[j]));
    return scale > 0.0 ? worst / scale : worst;
}

/// Winding number of a response around the origin as f sweeps the grid.
inline long winding_number(std::span<const cplx> response) {
    double total = 0.0;
    std::size_t m = response.size();
    for (std::size_t k = 0; k < m; ++k) {
        double d = std::arg(response[(k + 1) % m] / response[k]);
        total += d;
    }
    return std::lround(total / (2.0 * std::numbers::pi));
}

inline constexpr double instability_guard = 1e-6;

struct LoopDesign {
    FilterKernel G;
    FilterKernel Lprime;
    FilterKernel L;
    FilterKernel Lpostloop; // delay folded in
    std::size_t delay = 0;
    std::size_t lag = 0;
    double two_alpha = 0.0;
    SpectralDensity S2;
    double wh_residual = 0.0;
    double postloop_anticausal = 0.0;

    const TimeGrid& grid() const { return G.grid; }
    std::size_t taps() const { return grid().size() / 2; }
};

/// d = 8 ceil(B/b) samples.
inline std::size_t default_delay(const MessageSpec& spec) {
    return 8 * static_cast<std::size_t>(std::ceil(spec.ratio() - 1e-9));
}

/**
 * Loop filter L = L'/(2|a|(1 - L')) and post-loop filter L'' = G/L' delayed by d samples.
 */
inline LoopDesign loop_and_postloop(const FilterKernel& lp, const FilterKernel& g, double two_alpha, std::size_t d) {
    const TimeGrid& grid = lp.grid;
    std::size_t m = grid.size();
    cvec l(m, 0.0), lpp(m, 0.0), one_minus(m);
    for (std::size_t k = 0; k < m; ++k) {
        one_minus[k] = 1.0 - lp.response[k];
        if (std::abs(one_minus[k]) <= instability_guard)
            throw InstabilityError("|1 - L'| below the instability guard at bin " + std::to_string(k));
        if (lp.response[k] != 0.0) {
            if (!(two_alpha > 0.0)) throw InstabilityError("nonzero L' with zero carrier amplitude");
            l[k] = lp.response[k] / (two_alpha * one_minus[k]);
        }
        if (g.response[k] != 0.0) {
            if (std::abs(lp.response[k]) <= instability_guard)
                throw InstabilityError("L' vanishes where G does not, bin " + std::to_string(k));
            double phase = -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(d % m) /
                           static_cast<double>(m);
            lpp[k] = g.response[k] / lp.response[k] * std::polar(1.0, phase);
        }
    }
    LoopDesign out;
    out.G = g;
    out.Lprime = lp;
    out.L = FilterKernel(grid, std::move(l));
    // 1/(1 - L') is causal iff 1 - L' is minimum phase
    out.L.causal = lp.causal && winding_number(one_minus) == 0;
    out.Lpostloop = FilterKernel(grid, std::move(lpp));
    out.delay = d;
    out.two_alpha = two_alpha;
    out.postloop_anticausal = out.Lpostloop.anticausal;
    return out;
}

/// Full synthesis for a message, modulation and noise level.
inline LoopDesign design_loop(const SpectralDensity& sm, const PhaseResponse& h, double two_alpha,
                              const SpectralDensity& s2, std::size_t delay, std::size_t lag = 1) {
    double fas = two_alpha * two_alpha;
    std::size_t m = sm.values.size();
    rvec uv(m), vv(m);
    for (std::size_t k = 0; k < m; ++k) {
        double sig = (k == 0 && h.singular_dc) ? 0.0 : fas * sm.values[k] * std::norm(h.values[k]);
        vv[k] = sig;
        uv[k] = sig + s2.values[k];
    }
    SpectralDensity u(sm.grid, std::move(uv)), v(sm.grid, std::move(vv));
    FilterKernel lp = closed_loop_filter(u, v, lag);
    FilterKernel g = optimum_filter(sm, h, fas, s2);
    LoopDesign d = loop_and_postloop(lp, g, two_alpha, delay);
    d.lag = lag;
    d.S2 = s2;
    d.wh_residual = wiener_hopf_residual(lp, u, v, lag);
    return d;
}

/**
 * Tracking-error variance <(phibar - phiprime)^2> of the linearized loop for this design:
 * mean over bins of |1 - L'|^2 S_m |H|^2 + |L'|^2 S_2 / 4|a|^2.
 */
inline double predicted_tracking_variance(const LoopDesign& d, const SpectralDensity& sm, const PhaseResponse& h) {
    double fas = d.two_alpha * d.two_alpha;
    double s = 0.0;
    for (std::size_t k = 0; k < sm.values.size(); ++k) {
        double sig = (k == 0 && h.singular_dc) ? 0.0 : sm.values[k] * std::norm(h.values[k]);
        cplx lp = d.Lprime.response[k];
        s += std::norm(1.0 - lp) * sig + std::norm(lp) * d.S2.values[k] / fas;
    }
    return s / static_cast<double>(sm.values.size());
}

inline rvec linearized_map_estimate(const LoopDesign& design, std::span<const double> phi) {
    return apply_response(design.G.response, phi);
}

struct FixedPointOptions {
    double damping = 0.5;
    double tolerance = 1e-9;
    int max_iterations = 10000;
};

struct FixedPointResult {
    rvec estimate;
    int iterations;
};

namespace detail {
inline rvec homodyne_from_field(std::span<const cplx> a, std::span<const double> phase) {
    rvec p(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) p[j] = 2.0 * (a[j] * std::polar(1.0, -phase[j])).imag();
    return p;
}
} // namespace detail

/**
 * MAP estimate from the full complex field record: m = 2|a| K_m H^T p(m).
 *
 * The damped update is preconditioned by the linearized Jacobian 1 + 4|a|^2 S_m |H|^2,
 * without which the plain iteration diverges once beta^2 Lambda exceeds a few units.
 */
inline FixedPointResult nonlinear_map_fixed_point(const SpectralDensity& sm, const PhaseResponse& h, double two_alpha,
                                                  std::span<const cplx> a, std::span<const double> init,
                                                  const FixedPointOptions& opt = {}) {
    std::size_t m = sm.values.size();
    if (a.size() != m || init.size() != m) throw ConfigError("field record length does not match grid");
    cvec forward(m), back(m);
    rvec precond(m);
    for (std::size_t k = 0; k < m; ++k) {
        cplx hk = (k == 0 && h.singular_dc) ? cplx(0.0) : h.values[k];
        forward[k] = hk;
        back[k] = two_alpha * sm.values[k] * std::conj(hk);
        precond[k] = 1.0 + two_alpha * two_alpha * sm.values[k] * std::norm(hk);
    }
    rvec est(init.begin(), init.end());
    for (int it = 1; it <= opt.max_iterations; ++it) {
        rvec phase = apply_response(forward, est);
        rvec p = detail::homodyne_from_field(a, phase);
        cvec P = fft(std::span<const double>(p));
        cvec E = fft(std::span<const double>(est));
        for (std::size_t k = 0; k < m; ++k) P[k] = opt.damping * (back[k] * P[k] - E[k]) / precond[k];
        rvec step = ifft_real(P);
        double worst = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            est[j] += step[j];
            worst = std::max(worst, std::abs(step[j]));
        }
        if (!std::isfinite(worst)) throw ConvergenceError("fixed-point iteration produced non-finite values", est, it);
        if (worst < opt.tolerance) return {std::move(est), it};
    }
    throw ConvergenceError("fixed-point iteration did not converge", est, opt.max_iterations);
}

/**
 * Log posterior (up to a constant) of an estimate given the field record:
 * -1/2 m^T K_m^{-1} m + 2|a| sum_j Re(a_j exp(-i phi_j)). Used to rank competing fixed points.
 */
inline double map_log_posterior(const SpectralDensity& sm, const PhaseResponse& h, double two_alpha,
                                std::span<const cplx> a, std::span<const double> est) {
    std::size_t m = sm.values.size();
    cvec E = fft(est);
    double prior = 0.0;
    for (std::size_t k = 0; k < m; ++k)
        if (sm.values[k] > 0.0) prior += std::norm(E[k]) / sm.values[k];
    prior /= static_cast<double>(m);
    cvec fwd(h.values);
    if (h.singular_dc) fwd[0] = 0.0;
    rvec phase = apply_response(fwd, est);
    double like = 0.0;
    for (std::size_t j = 0; j < m; ++j) like += (a[j] * std::polar(1.0, -phase[j])).real();
    return -0.5 * prior + 2.0 * two_alpha * like;
}

/// Plain-text spectrum dump of every filter in a design.
inline void write_design_dump(std::ostream& os, const LoopDesign& d) {
    os << "# delay " << d.delay << " lag " << d.lag << " two_alpha " << d.two_alpha << " wh_residual " << d.wh_residual
       << " postloop_anticausal " << d.postloop_anticausal << '\n';
    os << "bin,frequency,G_re,G_im,Lprime_re,Lprime_im,L_re,L_im,Lpostloop_re,Lpostloop_im\n";
    char buf[512];
    const TimeGrid& g = d.grid();
    for (std::size_t k = 0; k < g.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%zu,%.17e,%.17e,%.17e,%.17e,%.17e,%.17e,%.17e,%.17e,%.17e\n", k,
                      g.frequency(k), d.G.response[k].real(), d.G.response[k].imag(), d.Lprime.response[k].real(),
                      d.Lprime.response[k].imag(), d.L.response[k].real(), d.L.response[k].imag(),
                      d.Lpostloop.response[k].real(), d.Lpostloop.response[k].imag());
        os << buf;
    }
}

} // namespace qphase
