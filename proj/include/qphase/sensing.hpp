#pragma once

#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "limits.hpp"
#include "quantum_noise.hpp"
#include "sampled_field.hpp"

namespace qphase {

enum class SensorKind { Multipass, FabryPerot };

inline constexpr double narrowband_limit = 0.1;     // Fabry-Perot mapping flagged invalid at beta >= 0.1
inline constexpr double interrogation_margin = 0.1; // pass when the round-trip delay is <= 0.1/b

struct SensorConfig {
    SensorKind kind = SensorKind::Multipass;
    double passes = 1.0;       // M, multipass only
    double reflectivity = 0.0; // R, Fabry-Perot only
    double theta = 0.0;        // incidence angle, rad
    double wavelength = 1550e-9;
    double rms_position = 0.0; // m
    double rms_velocity = 0.0; // m/s
    double message_bw = 1.0;   // b, Hz
    double cavity_length = 0.0;
    PhysicalConstants constants{};

    /// Carrier frequency c / lambda0.
    double carrier() const { return constants.c / wavelength; }

    void validate() const {
        if (kind == SensorKind::Multipass && !(passes >= 1.0 && std::floor(passes) == passes))
            throw DomainError("multipass needs an integer M >= 1");
        if (kind == SensorKind::FabryPerot) {
            if (!(reflectivity >= 0.0 && reflectivity < 1.0)) throw DomainError("reflectivity must lie in [0, 1)");
            if (theta != 0.0) throw DomainError("Fabry-Perot sensing requires normal incidence");
        }
        if (!(wavelength > 0.0)) throw DomainError("wavelength must be positive");
        if (!(message_bw > 0.0)) throw DomainError("message bandwidth must be positive");
    }
};

/// Resonant pass count (1 + sqrt R) / (1 - sqrt R).
inline double fabry_perot_m(double reflectivity) {
    if (!(reflectivity >= 0.0) || !(reflectivity < 1.0)) throw DomainError("reflectivity must lie in [0, 1)");
    double s = std::sqrt(reflectivity);
    return (1.0 + s) / (1.0 - s);
}

inline double effective_passes(const SensorConfig& cfg) {
    return cfg.kind == SensorKind::Multipass ? cfg.passes : fabry_perot_m(cfg.reflectivity);
}

struct PositionParams {
    double beta;
    double normalization; // m = x / rms_position, i.e. 1 / rms_position
    bool narrowband_ok;   // only meaningful for Fabry-Perot
};

/// beta = 2 M cos(theta) 2 pi sqrt(<x^2>) / lambda0.
inline PositionParams position_pm_params(const SensorConfig& cfg) {
    cfg.validate();
    if (!(cfg.rms_position > 0.0)) throw DomainError("RMS position must be positive");
    double mult = 2.0 * effective_passes(cfg) * std::cos(cfg.theta);
    double beta = mult * 2.0 * std::numbers::pi * cfg.rms_position / cfg.wavelength;
    bool ok = cfg.kind == SensorKind::Multipass || beta < narrowband_limit;
    return {beta, 1.0 / cfg.rms_position, ok};
}

struct VelocityParams {
    double deviation; // F, Hz
    double beta;      // 2F/b
    double sign;      // m(t) = sign * v(t) / rms_velocity
    bool narrowband_ok;
};

/// F = 2 M cos(theta) f0 sqrt(<v^2>) / c, beta = 2F/b, m = -v / rms.
inline VelocityParams velocity_fm_params(const SensorConfig& cfg) {
    cfg.validate();
    if (!(cfg.rms_velocity > 0.0)) throw DomainError("RMS velocity must be positive");
    double mult = 2.0 * effective_passes(cfg) * std::cos(cfg.theta);
    double dev = mult * cfg.carrier() * cfg.rms_velocity / cfg.constants.c;
    double beta = 2.0 * dev / cfg.message_bw;
    bool ok = cfg.kind == SensorKind::Multipass || beta < narrowband_limit;
    return {dev, beta, -1.0, ok};
}

struct InterrogationResult {
    double lhs;    // 2 (M - 1) L / (c cos theta), s
    double budget; // 0.1 / b, s
    bool pass;
};

inline InterrogationResult interrogation_constraint(const SensorConfig& cfg) {
    cfg.validate();
    double mm = effective_passes(cfg);
    double lhs = 2.0 * (mm - 1.0) * cfg.cavity_length / (cfg.constants.c * std::cos(cfg.theta));
    double budget = interrogation_margin / cfg.message_bw;
    return {lhs, budget, lhs <= budget};
}

struct PositionSpectrum {
    SpectralDensity density;
    bool dc_excluded;
};

/// S_x = S_v / (2 pi f)^2 per bin. The DC bin is set to 0 and flagged excluded.
inline PositionSpectrum position_velocity_psd(const SpectralDensity& sv, bool include_dc = false) {
    if (include_dc && sv.at_dc() != 0.0) throw DomainError("S_v(0) != 0: position spectrum singular at DC");
    rvec sx(sv.values.size(), 0.0);
    for (std::size_t k = 1; k < sx.size(); ++k) {
        double w = 2.0 * std::numbers::pi * sv.grid.frequency(k);
        sx[k] = sv.values[k] / (w * w);
    }
    return {SpectralDensity(sv.grid, std::move(sx)), true};
}

enum class SensedQuantity { Position, Velocity };

struct SenseResult {
    ModKind mod;
    double passes;
    double beta;
    double deviation; // FM only, 0 for position
    bool narrowband_ok;
    InterrogationResult interrogation;
    LimitQuery query;
    SnrResult snr;
};

/// Position maps to PM and velocity to FM; the photon budget (N, r) feeds the flat-band closed forms.
inline SenseResult sense_to_limits(const SensorConfig& cfg, SensedQuantity q, double n_photon, double r) {
    SenseResult out{};
    out.passes = effective_passes(cfg);
    if (q == SensedQuantity::Position) {
        auto p = position_pm_params(cfg);
        out.mod = ModKind::PM;
        out.beta = p.beta;
        out.narrowband_ok = p.narrowband_ok;
    } else {
        auto v = velocity_fm_params(cfg);
        out.mod = ModKind::FM;
        out.beta = v.beta;
        out.deviation = v.deviation;
        out.narrowband_ok = v.narrowband_ok;
    }
    out.interrogation = interrogation_constraint(cfg);
    out.query = LimitQuery{out.mod, out.beta, lambda_from_budget(n_photon, r), n_photon, r};
    out.snr = closed_form_snr(out.query);
    return out;
}

} // namespace qphase
