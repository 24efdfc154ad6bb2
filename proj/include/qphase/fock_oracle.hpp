#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "sampled_field.hpp"

namespace qphase::fock {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using cplx = std::complex<double>;

inline constexpr std::size_t dimension_budget = 4096;
inline constexpr double flag_tolerance = 1e-12;

inline std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) r *= base;
    return r;
}

/// Occupation of `mode` in basis index `index` for J modes of base d (mode 0 most significant).
inline int occupation_of(std::size_t index, int mode, int modes, std::size_t d) {
    return static_cast<int>((index / ipow(d, static_cast<std::size_t>(modes - 1 - mode))) % d);
}

inline void check_budget(std::size_t dim) {
    if (dim > dimension_budget)
        throw ResourceError("Fock dimension " + std::to_string(dim) + " exceeds budget " +
                            std::to_string(dimension_budget));
}

/// Amplitudes over multi-indices (n_0, ..., n_{J-1}); mode 0 is the most significant digit.
struct TruncatedState {
    TruncatedState(int modes, int n_max, Vector amps) : modes(modes), n_max(n_max), amplitudes(std::move(amps)) {
        if (modes < 1 || n_max < 0) throw ConfigError("state needs at least one mode and n_max >= 0");
        std::size_t dim = ipow(static_cast<std::size_t>(n_max + 1), static_cast<std::size_t>(modes));
        check_budget(dim);
        if (static_cast<std::size_t>(amplitudes.size()) != dim) throw ConfigError("amplitude count mismatch");
        if (std::abs(amplitudes.norm() - 1.0) > 1e-12) throw ConfigError("state is not normalized");
    }

    std::size_t dim() const { return static_cast<std::size_t>(amplitudes.size()); }

    /// Occupation of `mode` in basis state `index`.
    int occupation(std::size_t index, int mode) const {
        return occupation_of(index, mode, modes, static_cast<std::size_t>(n_max + 1));
    }

    int modes;
    int n_max;
    Vector amplitudes;
};

/// Tensor product of single-mode states with a common cutoff.
inline TruncatedState product_state(const std::vector<TruncatedState>& singles) {
    if (singles.empty()) throw ConfigError("empty product");
    int n_max = singles.front().n_max;
    Vector acc = Vector::Ones(1);
    for (const auto& s : singles) {
        if (s.modes != 1 || s.n_max != n_max) throw ConfigError("product needs single modes with equal cutoff");
        Vector next(acc.size() * s.amplitudes.size());
        for (Eigen::Index i = 0; i < acc.size(); ++i)
            next.segment(i * s.amplitudes.size(), s.amplitudes.size()) = acc(i) * s.amplitudes;
        acc = std::move(next);
    }
    return {static_cast<int>(singles.size()), n_max, acc};
}

/// Smallest cutoff accepted for a coherent amplitude: dimension n_max + 1 >= |a|^2 + 10|a| + 20.
inline int coherent_cutoff(double abs_alpha) {
    return static_cast<int>(std::ceil(abs_alpha * abs_alpha + 10.0 * abs_alpha + 20.0)) - 1;
}

inline TruncatedState coherent_coeffs(cplx alpha, int n_max) {
    double a = std::abs(alpha);
    if (n_max < coherent_cutoff(a))
        throw TruncationError("cutoff " + std::to_string(n_max) + " too small for |alpha| = " + std::to_string(a));
    Vector c(n_max + 1);
    c(0) = std::exp(-0.5 * a * a);
    for (int n = 1; n <= n_max; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    c /= c.norm();
    return {1, n_max, c};
}

inline TruncatedState number_state(int n, int n_max) {
    if (n < 0 || n > n_max) throw ConfigError("number state outside the truncated space");
    Vector c = Vector::Zero(n_max + 1);
    c(n) = 1.0;
    return {1, n_max, c};
}

/// exp(i theta n_total) applied to a state.
inline TruncatedState phase_shift(const TruncatedState& s, double theta) {
    Vector c = s.amplitudes;
    for (std::size_t i = 0; i < s.dim(); ++i) {
        int total = 0;
        for (int j = 0; j < s.modes; ++j) total += s.occupation(i, j);
        c(static_cast<Eigen::Index>(i)) *= std::polar(1.0, theta * total);
    }
    return {s.modes, s.n_max, c};
}

inline double mean_photon_number(const TruncatedState& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.dim(); ++i) {
        int total = 0;
        for (int j = 0; j < s.modes; ++j) total += s.occupation(i, j);
        acc += total * std::norm(s.amplitudes(static_cast<Eigen::Index>(i)));
    }
    return acc;
}

/// Phase grid point m of P: -pi + 2 pi m / P.
inline double phase_point(std::size_t m, std::size_t points) {
    return -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(points);
}

inline void check_phase_grid(int n_max, std::size_t points) {
    if (points < 8 * static_cast<std::size_t>(n_max + 1))
        throw AliasingError("phase grid of " + std::to_string(points) + " points is below 8 (n_max + 1)");
}

/// Canonical phase density on a P^J grid, row-major with mode 0 most significant.
struct PhaseDensity {
    int modes;
    std::size_t points;
    std::vector<double> values;

    double cell() const {
        return std::pow(2.0 * std::numbers::pi / static_cast<double>(points), modes);
    }

    double integral() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * cell();
    }
};

inline PhaseDensity canonical_phase_density(const TruncatedState& s, std::size_t points) {
    check_phase_grid(s.n_max, points);
    std::size_t grid_size = ipow(points, static_cast<std::size_t>(s.modes));
    if (grid_size > (std::size_t{1} << 22)) throw ResourceError("phase grid too large");
    std::size_t d = static_cast<std::size_t>(s.n_max + 1);
    // w[m][n] = exp(-i n phi_m)
    std::vector<cplx> w(points * d);
    for (std::size_t m = 0; m < points; ++m)
        for (std::size_t n = 0; n < d; ++n) w[m * d + n] = std::polar(1.0, -static_cast<double>(n) * phase_point(m, points));
    PhaseDensity out{s.modes, points, std::vector<double>(grid_size)};
    double norm = std::pow(2.0 * std::numbers::pi, s.modes);
    std::vector<std::size_t> gm(static_cast<std::size_t>(s.modes));
    for (std::size_t g = 0; g < grid_size; ++g) {
        for (int j = 0; j < s.modes; ++j)
            gm[static_cast<std::size_t>(j)] = (g / ipow(points, static_cast<std::size_t>(s.modes - 1 - j))) % points;
        cplx acc = 0.0;
        for (std::size_t i = 0; i < s.dim(); ++i) {
            cplx term = s.amplitudes(static_cast<Eigen::Index>(i));
            for (int j = 0; j < s.modes; ++j)
                term *= w[gm[static_cast<std::size_t>(j)] * d + static_cast<std::size_t>(s.occupation(i, j))];
            acc += term;
        }
        out.values[g] = std::norm(acc) / norm;
    }
    return out;
}

/// Circular mean and variance (about that mean, wrapped to [-pi, pi)) of a single-mode density.
struct PhaseMoments {
    double mean;
    double variance;
};

inline PhaseMoments phase_moments(const PhaseDensity& p) {
    if (p.modes != 1) throw ConfigError("phase moments need a single-mode density");
    cplx z = 0.0;
    for (std::size_t m = 0; m < p.points; ++m) z += p.values[m] * std::polar(1.0, phase_point(m, p.points));
    double mu = std::arg(z);
    double var = 0.0;
    for (std::size_t m = 0; m < p.points; ++m) {
        double x = std::remainder(phase_point(m, p.points) - mu, 2.0 * std::numbers::pi);
        var += x * x * p.values[m];
    }
    return {mu, var * p.cell()};
}

/// (1/P) sum_m |phi_m><phi_m| on the truncated space, |phi> = sum_n exp(i n phi) |n>.
inline Matrix povm_quadrature(int n_max, std::size_t points) {
    check_phase_grid(n_max, points);
    Eigen::Index d = n_max + 1;
    Matrix acc = Matrix::Zero(d, d);
    Vector ket(d);
    for (std::size_t m = 0; m < points; ++m) {
        double phi = phase_point(m, points);
        for (Eigen::Index n = 0; n < d; ++n) ket(n) = std::polar(1.0, static_cast<double>(n) * phi);
        acc += ket * ket.adjoint();
    }
    return acc / static_cast<double>(points);
}

inline double max_abs(const Matrix& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

inline double povm_resolution_check(int n_max, std::size_t points) {
    Matrix q = povm_quadrature(n_max, points);
    return max_abs(q - Matrix::Identity(q.rows(), q.cols()));
}

/// Dense operator with numerically verified hermitian / unitary flags.
struct ModeOperator {
    explicit ModeOperator(Matrix m) : matrix(std::move(m)) {
        hermitian = max_abs(matrix - matrix.adjoint()) < flag_tolerance;
        unitary = matrix.rows() == matrix.cols() &&
                  max_abs(matrix.adjoint() * matrix - Matrix::Identity(matrix.rows(), matrix.cols())) < flag_tolerance;
    }
    Matrix matrix;
    bool hermitian = false;
    bool unitary = false;
};

inline Matrix number_operator(int s) {
    Matrix n = Matrix::Zero(s + 1, s + 1);
    for (int i = 0; i <= s; ++i) n(i, i) = static_cast<double>(i);
    return n;
}

/// exp(i phi) = sum_{n=1}^{s} |n-1><n| + exp(i (s+1) phi0) |s><0|.
inline ModeOperator pegg_barnett_unitary(int s, double phi0 = 0.0) {
    if (s < 1) throw ConfigError("Pegg-Barnett operator needs s >= 1");
    Matrix e = Matrix::Zero(s + 1, s + 1);
    for (int n = 1; n <= s; ++n) e(n - 1, n) = 1.0;
    e(s, 0) = std::polar(1.0, static_cast<double>(s + 1) * phi0);
    ModeOperator op(std::move(e));
    if (!op.unitary) throw NumericalError("Pegg-Barnett operator failed its unitarity check");
    return op;
}

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

/// max |[E, n] - (1 - (s+1)|s><s|) E| for the Pegg-Barnett exponential.
inline double pegg_barnett_commutator_residual(int s, double phi0 = 0.0) {
    Matrix e = pegg_barnett_unitary(s, phi0).matrix;
    Matrix n = number_operator(s);
    Matrix p = Matrix::Identity(s + 1, s + 1);
    p(s, s) -= static_cast<double>(s + 1);
    return max_abs(commutator(e, n) - p * e);
}

/// I (x) ... (x) op (x) ... (x) I with op on `mode` of J.
inline Matrix embed(const Matrix& op, int mode, int modes) {
    Eigen::Index d = op.rows();
    Matrix acc = Matrix::Identity(1, 1);
    for (int j = 0; j < modes; ++j) {
        const Matrix f = (j == mode) ? op : Matrix::Identity(d, d);
        Matrix next = Matrix::Zero(acc.rows() * d, acc.cols() * d);
        for (Eigen::Index r = 0; r < acc.rows(); ++r)
            for (Eigen::Index c = 0; c < acc.cols(); ++c)
                if (acc(r, c) != 0.0) next.block(r * d, c * d, d, d) = acc(r, c) * f;
        acc = std::move(next);
    }
    return acc;
}

/// sin(phi_a - phi_b) = (E_a E_b^+ - E_b E_a^+) / 2i.
inline Matrix sin_difference(const Matrix& ea, const Matrix& eb) {
    return (ea * eb.adjoint() - eb * ea.adjoint()) / cplx(0.0, 2.0);
}

inline Matrix cos_difference(const Matrix& ea, const Matrix& eb) { return (ea * eb.adjoint() + eb * ea.adjoint()) / 2.0; }

/// F_j = (1 / 2 pi dt) sum_k d_{j-k} sin(phi_j - phi_k) on J modes with cutoff s.
inline std::vector<ModeOperator> instantaneous_frequency_operator(int modes, int s, double dt) {
    if (modes < 1 || modes > 3 || s < 1 || s > 4)
        throw ResourceError("frequency operator limited to J <= 3 and 1 <= s <= 4");
    check_budget(ipow(static_cast<std::size_t>(s + 1), static_cast<std::size_t>(modes)));
    Matrix e = pegg_barnett_unitary(s).matrix;
    std::vector<Matrix> ej;
    for (int j = 0; j < modes; ++j) ej.push_back(embed(e, j, modes));
    std::vector<ModeOperator> out;
    Eigen::Index dim = ej.front().rows();
    for (int j = 0; j < modes; ++j) {
        Matrix f = Matrix::Zero(dim, dim);
        for (int k = 0; k < modes; ++k) {
            if (k == j) continue;
            f += differentiator_kernel(j - k) * sin_difference(ej[static_cast<std::size_t>(j)], ej[static_cast<std::size_t>(k)]);
        }
        out.emplace_back(f / (2.0 * std::numbers::pi * dt));
        if (!out.back().hermitian) throw NumericalError("frequency operator failed its hermiticity check");
    }
    return out;
}

inline double expectation(const Matrix& op, const TruncatedState& s) {
    return (s.amplitudes.adjoint() * op * s.amplitudes)(0, 0).real();
}

struct CommutatorCheck {
    double residual;          // max over j != j' of |[v_j, n_j'] - (-i D cos(phi_j' - phi_j))|
    double projector_term;    // max norm of the neglected (N+1)|N><N| contribution
    double bound;             // max |D_{j-j'}| (N+1)
    double subspace_residual; // residual acting on the fixed-N sector with every occupation < N
};

/**
 * Velocity-density commutator on a J-site chain of N bosons, per-site cutoff N, hbar/m = 1.
 *
 * Only off-diagonal pairs j != j' are compared; on the diagonal D_0 = 0 makes the
 * approximate right-hand side vanish while the exact commutator does not.
 */
inline CommutatorCheck fluid_velocity_commutator_check(int sites, int bosons) {
    if (sites < 1 || sites > 3 || bosons < 1 || bosons > 3)
        throw ResourceError("fluid velocity check limited to J <= 3 and 1 <= N <= 3");
    const int s = bosons;
    Matrix e = pegg_barnett_unitary(s).matrix;
    Matrix top = Matrix::Zero(s + 1, s + 1);
    top(s, s) = 1.0;
    std::vector<Matrix> ej, nj, pj;
    for (int j = 0; j < sites; ++j) {
        ej.push_back(embed(e, j, sites));
        nj.push_back(embed(number_operator(s), j, sites));
        pj.push_back(embed(top, j, sites));
    }
    Eigen::Index dim = ej.front().rows();
    std::vector<Matrix> v;
    for (int j = 0; j < sites; ++j) {
        Matrix acc = Matrix::Zero(dim, dim);
        for (int k = 0; k < sites; ++k)
            if (k != j)
                acc += differentiator_kernel(j - k) *
                       sin_difference(ej[static_cast<std::size_t>(k)], ej[static_cast<std::size_t>(j)]);
        v.push_back(acc);
    }

    // basis states with total N and every occupation below N
    std::vector<Eigen::Index> sector;
    for (Eigen::Index i = 0; i < dim; ++i) {
        int total = 0, top_occ = 0;
        for (int j = 0; j < sites; ++j) {
            int o = occupation_of(static_cast<std::size_t>(i), j, sites, static_cast<std::size_t>(s + 1));
            total += o;
            top_occ = std::max(top_occ, o);
        }
        if (total == bosons && top_occ < bosons) sector.push_back(i);
    }

    CommutatorCheck out{0.0, 0.0, 0.0, 0.0};
    const cplx i_unit(0.0, 1.0);
    for (int j = 0; j < sites; ++j) {
        for (int m = 0; m < sites; ++m) {
            if (m == j) continue;
            auto uj = static_cast<std::size_t>(j), um = static_cast<std::size_t>(m);
            double dk = differentiator_kernel(j - m);
            Matrix c = commutator(v[uj], nj[um]);
            Matrix rhs = -i_unit * dk * cos_difference(ej[um], ej[uj]);
            Matrix r = c - rhs;
            Matrix proj = -dk * static_cast<double>(s + 1) *
                          (pj[um] * ej[um] * ej[uj].adjoint() + ej[uj] * ej[um].adjoint() * pj[um]) / (2.0 * i_unit);
            out.residual = std::max(out.residual, max_abs(r));
            out.projector_term = std::max(out.projector_term, max_abs(proj));
            out.bound = std::max(out.bound, std::abs(dk) * static_cast<double>(s + 1));
            for (Eigen::Index col : sector) out.subspace_residual = std::max(out.subspace_residual, r.col(col).cwiseAbs().maxCoeff());
        }
    }
    if (out.residual > out.bound + 1e-12)
        throw NumericalError("commutator residual exceeds the propagated projector bound");
    return out;
}

} // namespace qphase::fock
