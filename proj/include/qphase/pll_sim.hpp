#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "estimator_design.hpp"
#include "limits.hpp"
#include "quantum_noise.hpp"
#include "random.hpp"
#include "signal_model.hpp"

namespace qphase {

enum class Variant { Coherent, SqueezedZFeedback, PhaseSqueezedNoFeedback };

inline std::string to_string(Variant v) {
    switch (v) {
    case Variant::Coherent: return "coherent";
    case Variant::SqueezedZFeedback: return "squeezed_z_feedback";
    case Variant::PhaseSqueezedNoFeedback: return "phase_squeezed_no_feedback";
    }
    return "?";
}

inline NoiseKind noise_kind_for(Variant v) {
    switch (v) {
    case Variant::Coherent: return NoiseKind::Coherent;
    case Variant::SqueezedZFeedback: return NoiseKind::SqueezedZ;
    case Variant::PhaseSqueezedNoFeedback: return NoiseKind::PhaseSqueezed;
    }
    return NoiseKind::Coherent;
}

inline constexpr double min_band_ratio = 32.0;
inline constexpr double divergence_limit = 1e3;

struct PllConfig {
    std::shared_ptr<const LoopDesign> design;
    NoiseModel noise;
    ModulationScheme mod;
    MessageSpec msg;
    Variant variant = Variant::Coherent;
    int trials = 1;
    std::uint64_t seed = 0;

    double noise_scale = 1.0;  // 0 switches the vacuum noise off
    bool linearized = false;   // replace sin(e) by e and drop the x0 term
    double phase_offset = 0.0; // common offset on the mean phase and the LO reference
    unsigned threads = 0;      // 0: hardware concurrency

    void validate() const {
        if (!design) throw ConfigError("PLL config has no loop design");
        if (noise_kind_for(variant) != noise.kind) throw ConfigError("variant does not match the noise model");
        if (msg.ratio() < min_band_ratio * (1.0 - 1e-12))
            throw ConfigError("B/b must be at least 32 for the discrete loop");
        if (!(design->grid() == msg.grid)) throw ConfigError("design grid differs from message grid");
        if (design->lag < 1) throw ConfigError("simulated loop needs a strictly causal L' (lag >= 1)");
        if (!(design->two_alpha > 0.0)) throw ConfigError("simulated loop needs a nonzero carrier amplitude");
        if (trials < 1) throw ConfigError("trial count must be positive");
    }
};

struct TrialResult {
    double snr_empirical = 0.0;
    double mse = 0.0;
    double sigma0_sq_empirical = 0.0;
    long cycle_slips = 0;
    std::uint64_t seed = 0;
};

/// Detailed record of one trial, for diagnostics and tests.
struct TrialTrace {
    rvec message;
    rvec phibar;
    rvec phiprime;  // loop phase over the statistics window
    rvec estimate;  // post-loop output, aligned with message shifted by the delay
    rvec effective; // phibar + y0 / 2|a|, the linearized observation
    TrialResult result;
};

/// p' = 2|a| sin(e) + x0 sin(e) + y0 cos(e), e = phibar - phiprime.
inline double homodyne_output(double two_alpha, double phibar, double phiprime, double x0, double y0) {
    double e = phibar - phiprime;
    double s = std::sin(e), c = std::cos(e);
    return two_alpha * s + x0 * s + y0 * c;
}

/// Number of odd-multiple-of-pi crossings of the tracking error.
inline long cycle_slip_count(std::span<const double> error) {
    long count = 0;
    if (error.empty()) return 0;
    double prev = std::round(error[0] / (2.0 * std::numbers::pi));
    for (std::size_t j = 1; j < error.size(); ++j) {
        double cur = std::round(error[j] / (2.0 * std::numbers::pi));
        count += std::lround(std::abs(cur - prev));
        prev = cur;
    }
    return count;
}

inline long cycle_slip_count(std::span<const double> phibar, std::span<const double> phiprime) {
    if (phibar.size() != phiprime.size()) throw ConfigError("phase sequences differ in length");
    rvec e(phibar.size());
    for (std::size_t j = 0; j < e.size(); ++j) e[j] = phibar[j] - phiprime[j];
    return cycle_slip_count(e);
}

namespace detail {
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}
} // namespace detail

/**
 * One loop run in periodic steady state.
 *
 * The message and noise are one period of length M. The loop starts locked (its
 * filter history holds the linearized observation), runs max(4d, M/2) warm-up
 * samples and then one period of statistics. The post-loop filter acts circularly
 * on that period, so the estimate lags the message by exactly d samples.
 */
inline TrialTrace run_trial_trace(const PllConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const LoopDesign& d = *cfg.design;
    const TimeGrid& grid = cfg.msg.grid;
    const std::size_t m = grid.size();
    const double two_alpha = d.two_alpha;

    SpectralDensity sm = effective_message_psd(cfg.msg, cfg.mod.kind);
    GaussianSource src(seed);
    TrialTrace tr;
    tr.message = color_noise(src.draw(m), sm);
    tr.phibar = modulate(cfg.mod, grid, tr.message);

    rvec x0(m, 0.0), y0(m, 0.0);
    switch (cfg.variant) {
    case Variant::Coherent:
        x0 = src.draw(m);
        y0 = src.draw(m);
        break;
    case Variant::SqueezedZFeedback: {
        auto [s1, s2] = squeezed_covariance_psds(cfg.noise, grid);
        y0 = color_noise(src.draw(m), s2);
        break;
    }
    case Variant::PhaseSqueezedNoFeedback: {
        auto [s1, s2] = squeezed_covariance_psds(cfg.noise, grid);
        x0 = color_noise(src.draw(m), s1);
        y0 = color_noise(src.draw(m), s2);
        break;
    }
    }
    for (std::size_t j = 0; j < m; ++j) {
        x0[j] *= cfg.noise_scale;
        y0[j] *= cfg.noise_scale;
    }
    tr.effective.resize(m);
    for (std::size_t j = 0; j < m; ++j) tr.effective[j] = tr.phibar[j] + y0[j] / two_alpha;

    const std::size_t n = d.taps();
    const std::size_t lag = d.lag;
    const std::size_t warm = std::max(4 * d.delay, n);
    const long mm = static_cast<long>(m);
    cvec lp_taps = d.Lprime.taps();
    rvec taps_rev(n - lag);
    for (std::size_t q = 0; q < n - lag; ++q) taps_rev[q] = lp_taps[n - 1 - q].real();

    // psi_t = phiprime_t + p'_t / 2|a|; in the linear regime psi is the effective observation
    rvec psi(n + warm + m, 0.0);
    auto wrap = [mm](long t) { return static_cast<std::size_t>(((t % mm) + mm) % mm); };
    const long t_begin = -static_cast<long>(warm);
    for (std::size_t h = 0; h < n; ++h) {
        long t = t_begin - static_cast<long>(n) + static_cast<long>(h);
        psi[h] = tr.effective[wrap(t)];
    }

    tr.phiprime.assign(m, 0.0);
    rvec err(m, 0.0);
    const double offset = cfg.phase_offset;
    for (long t = t_begin; t < mm; ++t) {
        std::size_t idx = static_cast<std::size_t>(t - t_begin) + n;
        double phiprime = detail::dot(taps_rev.data(), psi.data() + (idx - n + 1), n - lag);
        std::size_t i = wrap(t);
        double lo = offset + phiprime;
        double e = (tr.phibar[i] + offset) - lo;
        if (!(std::abs(e) <= divergence_limit))
            throw DivergenceError("loop diverged: |phibar - phiprime| = " + std::to_string(e) + " at sample " +
                                      std::to_string(t),
                                  t, e);
        double p;
        if (cfg.linearized) p = two_alpha * e + y0[i];
        else if (cfg.variant == Variant::SqueezedZFeedback) p = two_alpha * std::sin(e) + y0[i];
        else p = homodyne_output(two_alpha, tr.phibar[i] + offset, lo, x0[i], y0[i]);
        psi[idx] = phiprime + p / two_alpha;
        if (t >= 0) {
            tr.phiprime[i] = phiprime;
            err[i] = e;
        }
    }

    tr.estimate = apply_response(d.Lpostloop.response, tr.phiprime);
    double se = 0.0, s0 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double truth = tr.message[(j + m - d.delay % m) % m];
        double diff = tr.estimate[j] - truth;
        se += diff * diff;
        s0 += err[j] * err[j];
    }
    TrialResult& r = tr.result;
    r.mse = se / static_cast<double>(m);
    r.snr_empirical = 1.0 / r.mse;
    r.sigma0_sq_empirical = s0 / static_cast<double>(m);
    r.cycle_slips = cycle_slip_count(err);
    r.seed = seed;
    return tr;
}

inline TrialResult run_trial(const PllConfig& cfg, std::uint64_t seed) { return run_trial_trace(cfg, seed).result; }

/// Seed of trial `index` in cell `cell` under the master seed.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t index) {
    return derive_seed(master, cell, index);
}

/// Runs cfg.trials trials; results are ordered by trial index whatever the thread count.
inline std::vector<TrialResult> run_trials(const PllConfig& cfg, std::uint64_t cell = 0) {
    cfg.validate();
    std::size_t count = static_cast<std::size_t>(cfg.trials);
    std::vector<TrialResult> out(count);
    unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                out[i] = run_trial(cfg, trial_seed(cfg.seed, cell, i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

struct CellStats {
    int trials = 0;
    double mse_mean = 0.0;
    double mse_stderr = 0.0;
    double snr = 0.0;
    double snr_stderr = 0.0;
    double sigma0_sq_empirical = 0.0;
    long cycle_slips = 0;
    double slip_fraction = 0.0; // fraction of trials with at least one slip
};

inline CellStats aggregate(std::span<const TrialResult> rs) {
    CellStats c;
    c.trials = static_cast<int>(rs.size());
    if (rs.empty()) return c;
    double n = static_cast<double>(rs.size());
    double sum = 0.0, sum0 = 0.0;
    long slipped = 0;
    for (const auto& r : rs) {
        sum += r.mse;
        sum0 += r.sigma0_sq_empirical;
        c.cycle_slips += r.cycle_slips;
        if (r.cycle_slips > 0) ++slipped;
    }
    c.mse_mean = sum / n;
    double var = 0.0;
    for (const auto& r : rs) var += (r.mse - c.mse_mean) * (r.mse - c.mse_mean);
    c.mse_stderr = rs.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
    c.snr = 1.0 / c.mse_mean;
    c.snr_stderr = c.snr * c.mse_stderr / c.mse_mean;
    c.sigma0_sq_empirical = sum0 / n;
    c.slip_fraction = static_cast<double>(slipped) / n;
    return c;
}

/// One point of a Monte Carlo parameter grid.
struct CellSpec {
    ModKind mod = ModKind::PM;
    Variant variant = Variant::Coherent;
    MessageKind message = MessageKind::FlatBand;
    double beta = 1.0;
    std::optional<double> lambda;   // coherent-equivalent Lambda = 4|a|^2 S_m(0) / S_2(0)
    std::optional<double> n_photon; // photons per 1/b; used when lambda is absent
    double r = 0.0;
    double bandwidth = 1.0;           // B
    std::size_t grid_size = 4096;     // M
    std::size_t message_bins = 63;    // flat band: b = bins * B / M
    double band_ratio = 256.0;        // Lorentzian: B / b
    std::optional<std::size_t> delay; // default 8 ceil(B/b)
    std::size_t lag = 1;
};

/// A resolved cell: configuration plus analytic predictions.
struct Cell {
    CellSpec spec;
    PllConfig config;
    double lambda = 0.0;
    double n_photon = 0.0;
    double snr_analytic = 0.0;
    double sigma0_sq = 0.0;
    double threshold_lhs = 0.0;
    bool pass_threshold = false;
};

inline Cell build_cell(const CellSpec& s, int trials, std::uint64_t seed) {
    TimeGrid grid(s.bandwidth, s.grid_size);
    MessageSpec msg = s.message == MessageKind::FlatBand
                          ? MessageSpec::flat_bins(grid, s.message_bins)
                          : MessageSpec(MessageKind::Lorentzian, s.bandwidth / s.band_ratio, grid);
    double b = msg.bandwidth;
    double ratio = msg.ratio();
    double sm0_nominal = s.message == MessageKind::FlatBand ? ratio : lorentzian_peak(s.bandwidth, b);
    double sinh2 = std::sinh(s.r) * std::sinh(s.r);
    double s20 = s.variant == Variant::Coherent ? 1.0 : std::exp(-2.0 * s.r);
    if (s.variant == Variant::Coherent && s.r != 0.0) throw ConfigError("coherent cells require r = 0");

    double alpha_sq;
    if (s.lambda) {
        if (!(*s.lambda > 0.0)) throw ConfigError("Lambda must be positive");
        alpha_sq = *s.lambda * s20 / (4.0 * sm0_nominal);
    } else if (s.n_photon) {
        if (sinh2 >= *s.n_photon) throw DomainError("infeasible photon budget: sinh^2 r >= N");
        alpha_sq = (*s.n_photon - sinh2) / ratio;
    } else {
        throw ConfigError("cell needs lambda or n_photon");
    }
    double alpha = std::sqrt(alpha_sq);
    NoiseKind kind = noise_kind_for(s.variant);
    NoiseModel noise(kind, alpha, s.r, kind == NoiseKind::Coherent ? 0.0 : b);
    ModulationScheme mod(s.mod, s.beta, b);

    Cell c{s, PllConfig{nullptr, noise, mod, msg, s.variant, trials, seed}};
    c.lambda = lambda_parameter(noise, sm0_nominal);
    c.n_photon = alpha_sq * ratio + (kind == NoiseKind::Coherent ? 0.0 : sinh2);

    SpectralDensity sm = effective_message_psd(msg, s.mod);
    PhaseResponse h = phase_response(mod, grid);
    SpectralDensity s2 = squeezed_covariance_psds(noise, grid).second;
    std::size_t delay = s.delay.value_or(default_delay(msg));
    c.config.design = std::make_shared<const LoopDesign>(design_loop(sm, h, 2.0 * alpha, s2, delay, s.lag));

    if (s.message == MessageKind::FlatBand) {
        LimitQuery q{s.mod, s.beta, c.lambda, c.n_photon, s.r, MessageKind::FlatBand,
                     s.variant == Variant::PhaseSqueezedNoFeedback};
        c.snr_analytic = closed_form_snr(q).snr;
        c.sigma0_sq = sigma0(q);
        c.threshold_lhs = threshold_check(q).lhs;
    } else {
        c.snr_analytic = s.mod == ModKind::PM ? lorentzian_pm_snr(s.beta, c.n_photon)
                                              : 1.0 / irreducible_error(sm, h, 4.0 * alpha_sq, s2);
        c.sigma0_sq = sigma0_grid(sm, h, 4.0 * alpha_sq, s2);
        c.threshold_lhs = c.sigma0_sq * (s.variant == Variant::PhaseSqueezedNoFeedback ? std::exp(4.0 * s.r) : 1.0);
    }
    c.pass_threshold = c.threshold_lhs <= threshold_limit;
    return c;
}

struct CellResult {
    Cell cell;
    CellStats stats;
    std::vector<TrialResult> trials;
};

/// Runs every cell with per-trial seeds split from the master seed by (cell index, trial index).
inline std::vector<CellResult> monte_carlo_sweep(std::span<const CellSpec> grid, int trials, std::uint64_t seed,
                                                 unsigned threads = 0) {
    std::vector<CellResult> out;
    out.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Cell c = build_cell(grid[i], trials, seed);
        c.config.threads = threads;
        auto rs = run_trials(c.config, i);
        CellStats st = aggregate(rs);
        out.push_back({std::move(c), st, std::move(rs)});
    }
    return out;
}

} // namespace qphase
