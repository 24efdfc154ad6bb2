#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include "errors.hpp"
#include "fft.hpp"
#include "random.hpp"
#include "sampled_field.hpp"

namespace qphase {

enum class MessageKind { FlatBand, Lorentzian };
enum class ModKind { PM, FM };

inline std::string to_string(MessageKind k) { return k == MessageKind::FlatBand ? "flat" : "lorentzian"; }
inline std::string to_string(ModKind k) { return k == ModKind::PM ? "pm" : "fm"; }

/// Unit-variance stationary Gaussian message of bandwidth b on a grid.
struct MessageSpec {
    MessageSpec(MessageKind kind, double bandwidth, TimeGrid grid) : kind(kind), bandwidth(bandwidth), grid(grid) {
        if (!(bandwidth > 0.0)) throw ConfigError("message bandwidth must be positive");
        if (bandwidth > grid.bandwidth() * (1.0 + 1e-12))
            throw ConfigError("message bandwidth exceeds grid bandwidth");
        if (kind == MessageKind::FlatBand) band_weights(grid, bandwidth); // validates bin alignment
    }

    /// Flat band covering exactly `bins` DFT bins.
    static MessageSpec flat_bins(const TimeGrid& grid, std::size_t bins) {
        return {MessageKind::FlatBand, static_cast<double>(bins) * grid.bin_width(), grid};
    }

    double ratio() const { return grid.bandwidth() / bandwidth; } // B/b

    MessageKind kind;
    double bandwidth;
    TimeGrid grid;
};

struct ModulationScheme {
    static ModulationScheme pm(double beta, double message_bw) { return {ModKind::PM, beta, message_bw}; }

    /// FM from the frequency deviation F; the index is 2F/b.
    static ModulationScheme fm_deviation(double deviation, double message_bw) {
        return {ModKind::FM, 2.0 * deviation / message_bw, message_bw};
    }

    static ModulationScheme fm(double beta, double message_bw) { return {ModKind::FM, beta, message_bw}; }

    ModulationScheme(ModKind kind, double beta, double message_bw) : kind(kind), beta(beta), message_bw(message_bw) {
        if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("modulation index must be positive");
        if (!(message_bw > 0.0)) throw ConfigError("message bandwidth must be positive");
    }

    double deviation() const { return beta * message_bw / 2.0; }

    ModKind kind;
    double beta;
    double message_bw;
};

/// H(f) on the grid. For FM the DC bin carries no value and is flagged singular.
struct PhaseResponse {
    cvec values;
    bool singular_dc = false;
};

inline SpectralDensity message_psd(const MessageSpec& spec) {
    const TimeGrid& g = spec.grid;
    rvec s(g.size(), 0.0);
    if (spec.kind == MessageKind::FlatBand) {
        rvec w = band_weights(g, spec.bandwidth);
        double level = g.bandwidth() / spec.bandwidth;
        for (std::size_t k = 0; k < s.size(); ++k) s[k] = level * w[k];
        return {g, std::move(s)};
    }
    double b = spec.bandwidth;
    for (std::size_t k = 0; k < s.size(); ++k) {
        double f = g.frequency(k);
        s[k] = g.bandwidth() / (2.0 * std::numbers::pi) * b / (f * f + 0.25 * b * b);
    }
    SpectralDensity d{g, std::move(s)};
    double mean = d.bin_mean();
    for (double& v : d.values) v /= mean;
    return d;
}

/// S_m(0) of the unnormalized Lorentzian, 2B/(pi b).
inline double lorentzian_peak(double grid_bw, double message_bw) { return 2.0 * grid_bw / (std::numbers::pi * message_bw); }

/**
 * Message PSD as seen by the loop. FM removes the DC bin: a constant frequency offset
 * has no phase signature on a periodic grid.
 */
inline SpectralDensity effective_message_psd(const MessageSpec& spec, ModKind mod) {
    SpectralDensity s = message_psd(spec);
    if (mod == ModKind::FM) s.values[0] = 0.0;
    return s;
}

/// Colors unit white noise by sqrt(S) in the frequency domain.
inline rvec color_noise(std::span<const double> white, const SpectralDensity& s) {
    cvec W = fft(white);
    for (std::size_t k = 0; k < W.size(); ++k) W[k] *= std::sqrt(s.values[k]);
    return ifft_real(W);
}

inline rvec sample_with_psd(const SpectralDensity& s, std::uint64_t seed) {
    GaussianSource src(seed);
    rvec w = src.draw(s.grid.size());
    return color_noise(w, s);
}

inline rvec sample_message(const MessageSpec& spec, std::uint64_t seed) { return sample_with_psd(message_psd(spec), seed); }

inline PhaseResponse phase_response(const ModulationScheme& mod, const TimeGrid& grid) {
    PhaseResponse h;
    h.values.assign(grid.size(), cplx(0.0));
    if (mod.kind == ModKind::PM) {
        std::fill(h.values.begin(), h.values.end(), cplx(mod.beta));
        return h;
    }
    h.singular_dc = true;
    double dev = mod.deviation();
    std::size_t m = grid.size();
    for (std::size_t k = 1; k < m; ++k) {
        if (m > 1 && 2 * k == m) continue; // Nyquist bin: a real kernel needs a real value, the odd part is 0
        double f = grid.frequency(k);
        h.values[k] = -dev / (cplx(0.0, 1.0) * f);
    }
    return h;
}

inline rvec modulate(const ModulationScheme& mod, const TimeGrid& grid, std::span<const double> m) {
    if (m.size() != grid.size()) throw ConfigError("message length does not match grid");
    if (mod.kind == ModKind::PM) {
        rvec out(m.begin(), m.end());
        for (double& v : out) v *= mod.beta;
        return out;
    }
    return apply_response(phase_response(mod, grid).values, m);
}

inline double carson_bandwidth(double beta, double message_bw, std::optional<double> squeeze_bw = std::nullopt) {
    double bw = (beta + 1.0) * message_bw;
    if (squeeze_bw) bw += *squeeze_bw;
    return bw;
}

inline double carson_bandwidth(const ModulationScheme& mod, std::optional<double> squeeze_bw = std::nullopt) {
    return carson_bandwidth(mod.beta, mod.message_bw, squeeze_bw);
}

} // namespace qphase
