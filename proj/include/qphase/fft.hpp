#pragma once

#include <complex>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace qphase {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using rvec = std::vector<double>;

namespace detail {
inline Eigen::FFT<double>& fft_engine() {
    thread_local Eigen::FFT<double> engine;
    return engine;
}
} // namespace detail

/// Forward DFT, X_k = sum_n x_n exp(-i 2 pi k n / M).
inline cvec fft(std::span<const cplx> x) {
    cvec in(x.begin(), x.end());
    cvec out;
    detail::fft_engine().fwd(out, in);
    return out;
}

inline cvec fft(std::span<const double> x) {
    cvec in(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) in[i] = x[i];
    return fft(std::span<const cplx>(in));
}

/// Inverse DFT with the 1/M factor.
inline cvec ifft(std::span<const cplx> X) {
    cvec in(X.begin(), X.end());
    cvec out;
    detail::fft_engine().inv(out, in);
    return out;
}

/// Inverse DFT keeping only the real part.
inline rvec ifft_real(std::span<const cplx> X) {
    cvec c = ifft(X);
    rvec r(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) r[i] = c[i].real();
    return r;
}

/// Applies a frequency response to a real sequence (circular convolution).
inline rvec apply_response(std::span<const cplx> H, std::span<const double> x) {
    cvec X = fft(x);
    for (std::size_t k = 0; k < X.size(); ++k) X[k] *= H[k];
    return ifft_real(X);
}

} // namespace qphase
