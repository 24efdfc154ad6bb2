#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "errors.hpp"
#include "sampled_field.hpp"
#include "signal_model.hpp"

namespace qphase {

struct LimitQuery {
    ModKind mod = ModKind::PM;
    double beta = 1.0;
    double lambda = 0.0;
    double n_photon = 0.0;
    double r = 0.0;
    MessageKind message_kind = MessageKind::FlatBand;
    bool phase_squeezed = false;

    void validate() const {
        if (!(beta >= 0.0) || !(lambda >= 0.0) || !(n_photon >= 0.0) || !(r >= 0.0))
            throw DomainError("limit query parameters must be nonnegative");
        if (!std::isfinite(beta * beta * lambda)) throw DomainError("beta^2 Lambda must be finite");
    }
};

/// Per-bin error spectrum S_m S_2 / (4|alpha|^2 S_m |H|^2 + S_2); the FM DC bin is 0.
inline rvec error_spectrum(const SpectralDensity& sm, const PhaseResponse& h, double four_alpha_sq,
                           const SpectralDensity& s2) {
    rvec e(sm.values.size());
    for (std::size_t k = 0; k < e.size(); ++k) {
        if (k == 0 && h.singular_dc) {
            e[k] = 0.0;
            continue;
        }
        double num = sm.values[k] * s2.values[k];
        double den = four_alpha_sq * sm.values[k] * std::norm(h.values[k]) + s2.values[k];
        e[k] = num == 0.0 ? 0.0 : num / den;
    }
    return e;
}

inline double irreducible_error(const SpectralDensity& sm, const PhaseResponse& h, double four_alpha_sq,
                                const SpectralDensity& s2) {
    rvec e = error_spectrum(sm, h, four_alpha_sq, s2);
    double s = 0.0;
    for (double v : e) s += v;
    return s / static_cast<double>(e.size());
}

/**
 * Linearized loop phase-error variance on the grid:
 * mean over bins of (S_2 / 4|a|^2) ln(1 + 4|a|^2 S_m |H|^2 / S_2).
 */
inline double sigma0_grid(const SpectralDensity& sm, const PhaseResponse& h, double four_alpha_sq,
                          const SpectralDensity& s2) {
    if (!(four_alpha_sq > 0.0)) throw DomainError("sigma0 requires a nonzero carrier amplitude");
    double s = 0.0;
    for (std::size_t k = 0; k < sm.values.size(); ++k) {
        if (k == 0 && h.singular_dc) continue;
        double sig = four_alpha_sq * sm.values[k] * std::norm(h.values[k]);
        if (sig > 0.0) s += s2.values[k] * std::log1p(sig / s2.values[k]);
    }
    return s / (four_alpha_sq * static_cast<double>(sm.values.size()));
}

struct SnrResult {
    double sigma_sq;
    double snr;
};

inline double pm_sigma_sq(double beta, double lambda) { return 1.0 / (beta * beta * lambda + 1.0); }

inline double fm_sigma_sq(double beta, double lambda) {
    double x = beta * beta * lambda;
    if (x == 0.0) return 1.0;
    double s = std::sqrt(x);
    return 1.0 - s * std::atan(1.0 / s);
}

/// Large beta^2 Lambda asymptote of the FM error, 1/(3 beta^2 Lambda).
inline double fm_sigma_sq_asymptotic(double beta, double lambda) { return 1.0 / (3.0 * beta * beta * lambda); }

inline SnrResult closed_form_snr(const LimitQuery& q) {
    q.validate();
    if (q.message_kind != MessageKind::FlatBand) throw DomainError("closed forms require a flat-band message");
    double s = q.mod == ModKind::PM ? pm_sigma_sq(q.beta, q.lambda) : fm_sigma_sq(q.beta, q.lambda);
    return {s, 1.0 / s};
}

/// PM SNR for a Lorentzian message in the wideband limit, sqrt(8 beta^2 N / pi + 1).
inline double lorentzian_pm_snr(double beta, double n_photon) {
    return std::sqrt(8.0 * beta * beta * n_photon / std::numbers::pi + 1.0);
}

enum class QuantumLimit { SQL, Heisenberg, LogBound };

inline std::string to_string(QuantumLimit k) {
    switch (k) {
    case QuantumLimit::SQL: return "sql";
    case QuantumLimit::Heisenberg: return "heisenberg";
    case QuantumLimit::LogBound: return "log_bound";
    }
    return "?";
}

/// LogBound is an upper-bound marker, not a prediction.
inline double quantum_limit_snr(QuantumLimit kind, double n_photon, double beta, ModKind mod) {
    if (!(n_photon > 0.0)) throw DomainError("photon number must be positive");
    double fm = mod == ModKind::FM ? 3.0 : 1.0;
    double b2 = beta * beta;
    switch (kind) {
    case QuantumLimit::SQL: return fm * 4.0 * b2 * n_photon;
    case QuantumLimit::Heisenberg: return fm * 4.0 * b2 * n_photon * (n_photon + 1.0);
    case QuantumLimit::LogBound:
        if (n_photon <= 1.0) throw DomainError("log bound requires N > 1");
        return fm * 8.0 * b2 * n_photon * n_photon / std::log(n_photon);
    }
    return 0.0;
}

struct SqueezeOptimum {
    double exp2r;
    double r;
};

inline SqueezeOptimum optimal_squeeze(double n_photon) {
    if (!(n_photon >= 0.0)) throw DomainError("photon number must be nonnegative");
    double e = 2.0 * n_photon + 1.0;
    return {e, 0.5 * std::log(e)};
}

/// Linearized phase-error variance of the loop; closed forms for the flat band.
inline double sigma0(const LimitQuery& q) {
    q.validate();
    if (q.message_kind != MessageKind::FlatBand) throw DomainError("sigma0 closed forms require a flat-band message");
    if (q.lambda == 0.0) return q.mod == ModKind::PM ? q.beta * q.beta : std::numeric_limits<double>::infinity();
    double x = q.beta * q.beta * q.lambda;
    double s = std::log1p(x);
    if (q.mod == ModKind::FM) {
        double bl = q.beta * std::sqrt(q.lambda);
        s += 2.0 * bl * std::atan(1.0 / bl);
    }
    return s / q.lambda;
}

struct ThresholdResult {
    double lhs;
    bool pass;
    bool approximate; // squeezed constraint is an order-of-magnitude statement
};

inline constexpr double threshold_limit = 0.25;

inline ThresholdResult threshold_check(const LimitQuery& q) {
    double lhs = sigma0(q);
    bool approx = false;
    if (q.phase_squeezed) {
        lhs *= std::exp(4.0 * q.r);
        approx = q.r > 0.0;
    }
    return {lhs, lhs <= threshold_limit, approx};
}

} // namespace qphase
