#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "torusns/field.hpp"

namespace torusns {

// ---------------------------------------------------------------------
// Multiplier building blocks on raw spectra.  All high-level operations
// below are Fourier multipliers, so they commute exactly with each other.
// ---------------------------------------------------------------------

namespace spectral_detail {

/// Odd-order derivatives zero the Nyquist rows (the multiplier i*k has no
/// consistent sign there).
inline bool nyquist(const TorusGrid& g, int mx, int my) {
    return mx == g.n / 2 || my == g.n / 2 || my == -g.n / 2;
}

}  // namespace spectral_detail

inline std::vector<cplx> derivative_spec(const TorusGrid& g, const std::vector<cplx>& in,
                                         int axis, int order) {
    if (axis != 1 && axis != 2) throw Error("derivative: axis must be 1 or 2");
    if (order != 1 && order != 2) throw Error("derivative: order must be 1 or 2");
    std::vector<cplx> out(in.size());
    const double ku = g.wavenumber_unit();
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        const double k = ku * (axis == 1 ? mx : my);
        if (order == 1) {
            out[idx] = spectral_detail::nyquist(g, mx, my) ? cplx(0.0)
                                                           : cplx(0.0, k) * in[idx];
        } else {
            out[idx] = -k * k * in[idx];
        }
    });
    return out;
}

/// Spectral partial derivative; the mean of a first derivative is exactly 0.
inline ScalarField derivative(const ScalarField& f, int axis, int order = 1) {
    return ScalarField::from_spectral(f.grid(), derivative_spec(f.grid(), f.spectral(), axis, order));
}

inline VectorField gradient(const ScalarField& f) {
    return VectorField(derivative(f, 1), derivative(f, 2));
}

inline ScalarField divergence(const VectorField& w) {
    const TorusGrid& g = w.grid();
    std::vector<cplx> s = derivative_spec(g, w[0].spectral(), 1, 1);
    const std::vector<cplx> s2 = derivative_spec(g, w[1].spectral(), 2, 1);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += s2[i];
    return ScalarField::from_spectral(g, std::move(s));
}

inline ScalarField laplacian(const ScalarField& f) {
    const TorusGrid& g = f.grid();
    std::vector<cplx> s(g.spectral_size());
    const auto& in = f.spectral();
    const double ku = g.wavenumber_unit();
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        s[idx] = -(ku * ku) * (double(mx) * mx + double(my) * my) * in[idx];
    });
    return ScalarField::from_spectral(g, std::move(s));
}

inline VectorField laplacian(const VectorField& w) {
    return VectorField(laplacian(w[0]), laplacian(w[1]));
}

/// Solve Laplace(out) = f - mean(f) with zero-mean output.
inline ScalarField inverse_laplacian(const ScalarField& f) {
    const TorusGrid& g = f.grid();
    std::vector<cplx> s(g.spectral_size());
    const auto& in = f.spectral();
    const double ku = g.wavenumber_unit();
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        const double k2 = (ku * ku) * (double(mx) * mx + double(my) * my);
        s[idx] = (k2 == 0.0) ? cplx(0.0) : in[idx] / (-k2);
    });
    return ScalarField::from_spectral(g, std::move(s));
}

// ---------------------------------------------------------------------
// Leray projector and its complement (the pressure operator).
// ---------------------------------------------------------------------

inline void leray_project_spec(const TorusGrid& g, std::vector<cplx>& u1, std::vector<cplx>& u2) {
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        const double k2 = double(mx) * mx + double(my) * my;
        if (k2 == 0.0) return;  // mean preserved
        const cplx kdotu = double(mx) * u1[idx] + double(my) * u2[idx];
        u1[idx] -= double(mx) * kdotu / k2;
        u2[idx] -= double(my) * kdotu / k2;
    });
}

/// L2-orthogonal projection onto divergence-free fields, I - kk^T/|k|^2.
inline VectorField leray_project(const VectorField& w) {
    const TorusGrid& g = w.grid();
    std::vector<cplx> s1 = w[0].spectral(), s2 = w[1].spectral();
    leray_project_spec(g, s1, s2);
    return VectorField(ScalarField::from_spectral(g, std::move(s1)),
                       ScalarField::from_spectral(g, std::move(s2)));
}

/// Gradient part kk^T/|k|^2 of a vector field (complement of the Leray
/// projector; also the operator -(-Laplace)^{-1} grad div).
inline VectorField gradient_part(const VectorField& w) {
    const TorusGrid& g = w.grid();
    const auto &a = w[0].spectral(), &b = w[1].spectral();
    std::vector<cplx> s1(a.size()), s2(a.size());
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        const double k2 = double(mx) * mx + double(my) * my;
        if (k2 == 0.0) {
            s1[idx] = s2[idx] = 0.0;
            return;
        }
        const cplx kdotu = double(mx) * a[idx] + double(my) * b[idx];
        s1[idx] = double(mx) * kdotu / k2;
        s2[idx] = double(my) * kdotu / k2;
    });
    return VectorField(ScalarField::from_spectral(g, std::move(s1)),
                       ScalarField::from_spectral(g, std::move(s2)));
}

// ---------------------------------------------------------------------
// Littlewood-Paley blocks.  chi(r) = theta(r) - theta(2r) with theta a
// quintic smoothstep, supported in [1/2, 2]; sum_j chi(2^-j r) = 1 for
// r > 0 (finite telescoping sum).
// ---------------------------------------------------------------------

inline double lp_theta(double r) {
    if (r <= 1.0) return 1.0;
    if (r >= 2.0) return 0.0;
    const double t = r - 1.0;
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

inline double lp_bump(double r) { return lp_theta(r) - lp_theta(2.0 * r); }

/// Inclusive range of block indices needed to cover every lattice mode of
/// the grid (corner modes reach |k| = sqrt(2) * nyquist).
inline std::pair<int, int> lp_band_range(const TorusGrid& g) {
    const int jmin = int(std::floor(std::log2(g.wavenumber_unit())));
    const double kmax = std::numbers::sqrt2 * g.nyquist_wavenumber();
    const int jmax = int(std::ceil(std::log2(kmax)));
    return {jmin, jmax};
}

inline std::vector<cplx> lp_block_spec(const TorusGrid& g, const std::vector<cplx>& in, int j) {
    const auto [jmin, jmax] = lp_band_range(g);
    if (j < jmin || j > jmax)
        throw BandOutOfRange("lp_block: scale 2^" + std::to_string(j) +
                             " outside the resolvable band [2^" + std::to_string(jmin) +
                             ", 2^" + std::to_string(jmax) + "]");
    std::vector<cplx> out(in.size());
    const double ku = g.wavenumber_unit();
    const double scale = std::ldexp(1.0, -j);  // 2^-j
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        const double kn = ku * std::sqrt(double(mx) * mx + double(my) * my);
        out[idx] = in[idx] * lp_bump(scale * kn);
    });
    out[0] = 0.0;  // blocks kill the mean
    return out;
}

inline ScalarField lp_block(const ScalarField& f, int j) {
    return ScalarField::from_spectral(f.grid(), lp_block_spec(f.grid(), f.spectral(), j));
}

inline VectorField lp_block(const VectorField& f, int j) {
    return VectorField(lp_block(f[0], j), lp_block(f[1], j));
}

// ---------------------------------------------------------------------
// Dealiasing (2/3 rule) and products.
// ---------------------------------------------------------------------

inline bool dealias_keep(const TorusGrid& g, int mx, int my) {
    const int cut = g.n / 3;
    return std::abs(mx) <= cut && std::abs(my) <= cut;
}

inline void dealias_spec(const TorusGrid& g, std::vector<cplx>& s) {
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        if (!dealias_keep(g, mx, my)) s[idx] = 0.0;
    });
}

inline ScalarField dealias(const ScalarField& f) {
    std::vector<cplx> s = f.spectral();
    dealias_spec(f.grid(), s);
    return ScalarField::from_spectral(f.grid(), std::move(s));
}

inline VectorField dealias(const VectorField& f) { return VectorField(dealias(f[0]), dealias(f[1])); }

/// Pointwise product followed by 2/3 truncation.
inline ScalarField multiply_dealiased(const ScalarField& a, const ScalarField& b) {
    return dealias(multiply(a, b));
}

// ---------------------------------------------------------------------
// Heat propagator, exact per mode.
// ---------------------------------------------------------------------

inline std::vector<cplx> heat_propagate_spec(const TorusGrid& g, const std::vector<cplx>& in,
                                             double nu, double t) {
    std::vector<cplx> out(in.size());
    const double ku = g.wavenumber_unit();
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        const double k2 = (ku * ku) * (double(mx) * mx + double(my) * my);
        out[idx] = in[idx] * std::exp(-nu * k2 * t);
    });
    return out;
}

inline ScalarField heat_propagate(const ScalarField& f, double nu, double t) {
    return ScalarField::from_spectral(f.grid(), heat_propagate_spec(f.grid(), f.spectral(), nu, t));
}

inline VectorField heat_propagate(const VectorField& f, double nu, double t) {
    return VectorField(heat_propagate(f[0], nu, t), heat_propagate(f[1], nu, t));
}

}  // namespace torusns
