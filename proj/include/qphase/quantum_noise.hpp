#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "errors.hpp"
#include "random.hpp"
#include "sampled_field.hpp"
#include "signal_model.hpp"

namespace qphase {

enum class NoiseKind { Coherent, SqueezedZ, PhaseSqueezed };

inline std::string to_string(NoiseKind k) {
    switch (k) {
    case NoiseKind::Coherent: return "coherent";
    case NoiseKind::SqueezedZ: return "squeezed_z";
    case NoiseKind::PhaseSqueezed: return "phase_squeezed";
    }
    return "?";
}

struct PhysicalConstants {
    double h = 6.62607015e-34;  // J s
    double c = 299792458.0;     // m/s
    double f0 = 1.935e14;       // carrier, Hz (1550 nm)
};

/// Coherent amplitude plus optional broadband squeezing of bandwidth squeeze_bw.
struct NoiseModel {
    static NoiseModel coherent(double alpha) { return {NoiseKind::Coherent, alpha, 0.0, 0.0}; }
    static NoiseModel squeezed_z(double alpha, double r, double bs) { return {NoiseKind::SqueezedZ, alpha, r, bs}; }
    static NoiseModel phase_squeezed(double alpha, double r, double bs) {
        return {NoiseKind::PhaseSqueezed, alpha, r, bs};
    }

    NoiseModel(NoiseKind kind, double alpha, double r, double bs) : kind(kind), alpha(alpha), r(r), squeeze_bw(bs) {
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("mean amplitude must be nonnegative");
        if (!(r >= 0.0)) throw ConfigError("squeeze parameter must be nonnegative");
        if (kind == NoiseKind::Coherent && r != 0.0) throw ConfigError("coherent noise requires r = 0");
        if (kind != NoiseKind::Coherent && !(bs > 0.0)) throw ConfigError("squeeze bandwidth must be positive");
    }

    bool squeezed() const { return kind != NoiseKind::Coherent; }

    NoiseKind kind;
    double alpha;      // |alpha| per mode
    double r;
    double squeeze_bw; // B_s
};

struct QuadratureRecord {
    TimeGrid grid;
    rvec x0;
    rvec y0;
};

inline QuadratureRecord sample_vacuum(const TimeGrid& grid, std::uint64_t seed) {
    GaussianSource src(seed);
    QuadratureRecord q{grid, src.draw(grid.size()), {}};
    q.y0 = src.draw(grid.size());
    return q;
}

/// (S1, S2): anti-squeezed and squeezed quadrature PSDs, e^{+-2r} in band and 1 outside.
inline std::pair<SpectralDensity, SpectralDensity> squeezed_covariance_psds(const NoiseModel& model,
                                                                            const TimeGrid& grid) {
    if (!model.squeezed()) return {SpectralDensity::constant(grid, 1.0), SpectralDensity::constant(grid, 1.0)};
    if (model.squeeze_bw > grid.bandwidth() * (1.0 + 1e-12)) throw ConfigError("squeeze bandwidth exceeds grid");
    rvec gamma = band_weights(grid, model.squeeze_bw);
    rvec s1(grid.size()), s2(grid.size());
    double up = std::exp(2.0 * model.r), down = std::exp(-2.0 * model.r);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        s1[k] = 1.0 - (1.0 - up) * gamma[k];
        s2[k] = 1.0 - (1.0 - down) * gamma[k];
    }
    return {SpectralDensity(grid, std::move(s1)), SpectralDensity(grid, std::move(s2))};
}

/// Squeezed-vacuum record: the vacuum draw for the same seed, filtered per quadrature.
inline QuadratureRecord sample_squeezed(const NoiseModel& model, const TimeGrid& grid, std::uint64_t seed) {
    QuadratureRecord q = sample_vacuum(grid, seed);
    auto [s1, s2] = squeezed_covariance_psds(model, grid);
    q.x0 = color_noise(q.x0, s1);
    q.y0 = color_noise(q.y0, s2);
    return q;
}

/// Lambda = 4|alpha|^2 S_m(0) / S_2(0).
inline double lambda_parameter(const NoiseModel& model, double sm0) {
    double s20 = model.squeezed() ? std::exp(-2.0 * model.r) : 1.0;
    return 4.0 * model.alpha * model.alpha * sm0 / s20;
}

/// Lambda at a fixed photon budget N with B_s = b: 4(N - sinh^2 r) e^{2r}.
inline double lambda_from_budget(double n_photon, double r) {
    double s = std::sinh(r);
    if (s * s >= n_photon) throw DomainError("infeasible photon budget: sinh^2 r >= N");
    return 4.0 * (n_photon - s * s) * std::exp(2.0 * r);
}

struct PhotonBudget {
    double power;    // W
    double n_photon; // photons per 1/b
};

inline PhotonBudget photon_budget(double alpha, double r, double grid_bw, double squeeze_bw, double message_bw,
                                  const PhysicalConstants& pc = {}) {
    double s = std::sinh(r);
    double quantum = pc.h * pc.f0;
    double p = quantum * grid_bw * alpha * alpha + quantum * squeeze_bw * s * s;
    return {p, p / (quantum * message_bw)};
}

/// |alpha|^2 that spends the remaining budget N - sinh^2 r on the coherent amplitude (B_s = b).
inline double alpha_sq_from_budget(double n_photon, double r, double grid_bw, double message_bw) {
    double s = std::sinh(r);
    return (n_photon - s * s) * message_bw / grid_bw;
}

} // namespace qphase
