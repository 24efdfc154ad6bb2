#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"

namespace qphase {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/**
 * @brief Uniform sampling grid of bandwidth B, spacing 1/B and power-of-two length.
 *
 * Frequencies are the DFT bins in FFT order; bin k maps to k*B/M for k < M/2 and
 * (k - M)*B/M otherwise, so they cover [-B/2, B/2).
 */
class TimeGrid {
public:
    TimeGrid() = default;

    TimeGrid(double bandwidth, std::size_t length, double origin = 0.0)
        : bandwidth_(bandwidth), length_(length), origin_(origin) {
        if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
            throw ConfigError("grid bandwidth must be positive and finite");
        if (!is_power_of_two(length))
            throw ConfigError("grid length must be a power of two, got " + std::to_string(length));
    }

    double bandwidth() const { return bandwidth_; }
    double spacing() const { return 1.0 / bandwidth_; }
    std::size_t size() const { return length_; }
    double origin() const { return origin_; }
    double bin_width() const { return bandwidth_ / static_cast<double>(length_); }
    double duration() const { return static_cast<double>(length_) * spacing(); }

    double time(long j) const { return origin_ + static_cast<double>(j) * spacing(); }

    long signed_bin(std::size_t k) const {
        long kk = static_cast<long>(k);
        long m = static_cast<long>(length_);
        return kk < m / 2 ? kk : kk - m;
    }

    double frequency(std::size_t k) const { return static_cast<double>(signed_bin(k)) * bin_width(); }

    bool operator==(const TimeGrid& o) const {
        return bandwidth_ == o.bandwidth_ && length_ == o.length_ && origin_ == o.origin_;
    }

private:
    double bandwidth_ = 1.0;
    std::size_t length_ = 1;
    double origin_ = 0.0;
};

/// Complex envelope samples a_j = A(t_j) sqrt(dt).
struct SampledEnvelope {
    SampledEnvelope(TimeGrid g, cvec s) : grid(g), samples(std::move(s)) {
        if (samples.size() != grid.size()) throw ConfigError("envelope length does not match grid");
    }
    TimeGrid grid;
    cvec samples;
};

/// Nonnegative per-bin spectral density in FFT bin order.
struct SpectralDensity {
    SpectralDensity() = default;
    SpectralDensity(TimeGrid g, rvec v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size()) throw ConfigError("density length does not match grid");
        for (double x : values)
            if (!(x >= 0.0)) throw ConfigError("spectral density must be nonnegative");
    }

    static SpectralDensity constant(const TimeGrid& g, double c) { return {g, rvec(g.size(), c)}; }

    /// Mean over bins; the variance of the process, (1/B) * integral of S df.
    double bin_mean() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }

    double at_dc() const { return values.front(); }

    TimeGrid grid;
    rvec values;
};

/// sin(pi x)/(pi x) with the removable singularity filled and exact zeros at integers.
inline double sinc_kernel(double x) {
    if (x == 0.0) return 1.0;
    double k = std::round(x);
    if (x == k) return 0.0;
    // reduce so sin(pi x) stays accurate for large |x|
    double r = x - k;
    double s = std::sin(std::numbers::pi * r);
    if (std::fmod(std::abs(k), 2.0) == 1.0) s = -s;
    return s / (std::numbers::pi * x);
}

/// Sum over all periodic images of sinc, i.e. the sinc sum for a sequence of period M.
inline double periodic_sinc(double x, std::size_t m) {
    if (m == 1) return 1.0;
    double md = static_cast<double>(m);
    double k = std::round(x);
    if (x == k) return std::fmod(k, md) == 0.0 ? 1.0 : 0.0;
    double r = x - k;
    double s = std::sin(std::numbers::pi * r);
    if (std::fmod(std::abs(k), 2.0) == 1.0) s = -s;
    return s / (md * std::tan(std::numbers::pi * x / md));
}

/**
 * Band-limited interpolation sqrt(B) sum_j a_j sinc(B(t - t_j)), with the samples
 * treated as one period of a periodic sequence.
 */
inline cplx reconstruct(const SampledEnvelope& env, double t) {
    const TimeGrid& g = env.grid;
    double first = g.time(0);
    double last = g.time(static_cast<long>(g.size()) - 1);
    if (t < first || t > last) throw OutOfRangeError("reconstruction time outside the grid span");
    double u = (t - first) * g.bandwidth();
    cplx acc = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        double w = periodic_sinc(u - static_cast<double>(j), g.size());
        if (w != 0.0) acc += env.samples[j] * w;
    }
    return acc * std::sqrt(g.bandwidth());
}

/// d_n = (-1)^n / n, d_0 = 0.
inline double differentiator_kernel(long n) {
    if (n == 0) return 0.0;
    return (n % 2 == 0 ? 1.0 : -1.0) / static_cast<double>(n);
}

/// Differentiator taps summed over periodic images for a length-M circular grid.
inline rvec periodic_differentiator(std::size_t m) {
    rvec d(m, 0.0);
    double md = static_cast<double>(m);
    for (std::size_t n = 1; n < m; ++n) {
        if (2 * n == m) continue; // images cancel at the half period
        double sign = (n % 2 == 0) ? 1.0 : -1.0;
        d[n] = sign * (std::numbers::pi / md) / std::tan(std::numbers::pi * static_cast<double>(n) / md);
    }
    return d;
}

/// Circular convolution with the differentiator; returns dt * d/dt of a band-limited sequence.
inline rvec differentiate(std::span<const double> x) {
    rvec d = periodic_differentiator(x.size());
    cvec D = fft(std::span<const double>(d));
    return apply_response(D, x);
}

/**
 * Averaged periodogram over `segments` contiguous segments.
 *
 * Normalized so the bin mean equals the mean square of the input, which is the
 * sample variance for the zero-mean processes used here.
 */
inline SpectralDensity estimate_psd(const TimeGrid& grid, std::span<const cplx> x, std::size_t segments) {
    if (segments == 0 || x.size() % segments != 0)
        throw ConfigError("segment count must divide the sequence length");
    std::size_t len = x.size() / segments;
    if (len < 8) throw ConfigError("segment length below 8 samples");
    rvec acc(len, 0.0);
    for (std::size_t s = 0; s < segments; ++s) {
        cvec X = fft(x.subspan(s * len, len));
        for (std::size_t k = 0; k < len; ++k) acc[k] += std::norm(X[k]);
    }
    double scale = 1.0 / (static_cast<double>(len) * static_cast<double>(segments));
    for (double& v : acc) v *= scale;
    return {TimeGrid(grid.bandwidth(), len, grid.origin()), std::move(acc)};
}

inline SpectralDensity estimate_psd(const TimeGrid& grid, std::span<const double> x, std::size_t segments) {
    cvec c(x.begin(), x.end());
    return estimate_psd(grid, std::span<const cplx>(c), segments);
}

inline SpectralDensity estimate_psd(const SampledEnvelope& env, std::size_t segments) {
    return estimate_psd(env.grid, std::span<const cplx>(env.samples), segments);
}

/**
 * Brick-wall membership weights for a band of full width w centered at DC.
 *
 * w / bin_width must be an integer n. Bins with |f| < w/2 get weight 1; when n is even
 * the two bins at |f| = w/2 get 1/2 each so the weight sum is exactly n. w = B gives 1
 * everywhere.
 */
inline rvec band_weights(const TimeGrid& grid, double width) {
    std::size_t m = grid.size();
    double nd = width / grid.bin_width();
    double n = std::round(nd);
    if (std::abs(nd - n) > 1e-9 * std::max(1.0, nd) || n < 1.0)
        throw ConfigError("band edge must fall on a DFT bin (width / bin width must be a positive integer)");
    if (n > static_cast<double>(m)) throw ConfigError("band wider than the grid bandwidth");
    rvec w(m, 0.0);
    std::size_t nb = static_cast<std::size_t>(n);
    if (nb == m) {
        std::fill(w.begin(), w.end(), 1.0);
        return w;
    }
    long half = static_cast<long>(nb / 2);
    for (std::size_t k = 0; k < m; ++k) {
        long s = std::labs(grid.signed_bin(k));
        if (nb % 2 == 1) {
            if (s <= half) w[k] = 1.0;
        } else {
            if (s < half) w[k] = 1.0;
            else if (s == half) w[k] = 0.5;
        }
    }
    return w;
}

} // namespace qphase
