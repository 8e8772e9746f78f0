#pragma once

#include <cstdint>
#include <cmath>

#include "torusns/norms.hpp"

namespace torusns {

// ---------------------------------------------------------------------
// Initial-data builders.  Random fields draw one Gaussian pair per integer
// mode from a counter-based generator keyed on (seed, mx, my), so a fixed
// seed describes the same analytic field at every resolution.
// ---------------------------------------------------------------------

namespace data_detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline double uniform01(std::uint64_t& s) {
    s = splitmix64(s);
    return (s >> 11) * 0x1.0p-53;
}

/// Standard normal pair via Box-Muller (portable across libraries).
inline void gaussian_pair(std::uint64_t seed, int mx, int my, double& g1, double& g2) {
    std::uint64_t s = splitmix64(seed ^ splitmix64(std::uint64_t(std::uint32_t(mx)) << 32 |
                                                   std::uint32_t(my)));
    double u1 = uniform01(s);
    const double u2 = uniform01(s);
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    g1 = r * std::cos(2.0 * std::numbers::pi * u2);
    g2 = r * std::sin(2.0 * std::numbers::pi * u2);
}

}  // namespace data_detail

/// Mean-free random scalar supported on the octaves jmin..jmax
/// (physical wavenumbers 2^jmin <= |k| < 2^{jmax+1}), normalized to
/// ||f||_{L2} = amplitude.
inline ScalarField random_band_scalar(const TorusGrid& g, int jmin, int jmax, std::uint64_t seed,
                                      double amplitude = 1.0) {
    const double klo = std::ldexp(1.0, jmin);
    const double khi = std::ldexp(2.0, jmax);  // 2^{jmax+1}
    const double ku = g.wavenumber_unit();
    std::vector<cplx> spec(g.spectral_size(), cplx(0.0));
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        const double k = ku * std::sqrt(double(mx) * mx + double(my) * my);
        if (k < klo || k >= khi) return;
        if (mx == g.n / 2 || my == g.n / 2) return;  // skip ambiguous Nyquist lines
        double g1, g2;
        data_detail::gaussian_pair(seed, mx, my, g1, g2);
        // decay inside the band keeps high octaves from dominating gradients
        const double sigma = 1.0 / (k * k);
        spec[idx] = sigma * cplx(g1, g2);
    });
    ScalarField f = ScalarField::from_spectral(g, std::move(spec));
    const double l2 = sobolev_norm_spec(g, f.spectral(), 0.0);
    if (l2 == 0.0) return f;
    return (amplitude / l2) * f;
}

/// Divergence-free random field: perpendicular gradient of a random
/// streamfunction, normalized to ||u||_{L2} = amplitude.
inline VectorField random_band_divfree(const TorusGrid& g, int jmin, int jmax, std::uint64_t seed,
                                       double amplitude = 1.0) {
    ScalarField psi = random_band_scalar(g, jmin, jmax, seed, 1.0);
    VectorField u(-1.0 * derivative(psi, 2), derivative(psi, 1));
    const double l2 = sobolev_norm(u, 0.0);
    if (l2 == 0.0) return u;
    return (amplitude / l2) * u;
}

/// Taylor-Green vortex scaled to the grid length (one cell of the classic
/// lattice): u = A (sin(qx) cos(qy), -cos(qx) sin(qy)), q = 2 pi / L.
inline VectorField taylor_green(const TorusGrid& g, double amplitude = 1.0) {
    const double q = g.wavenumber_unit();
    return VectorField::sample(
        g, [&](double x, double y) { return amplitude * std::sin(q * x) * std::cos(q * y); },
        [&](double x, double y) { return -amplitude * std::cos(q * x) * std::sin(q * y); });
}

/// Exact Taylor-Green decay rate: u(t) = exp(-2 mu q^2 t) u0.
inline double taylor_green_decay_rate(const TorusGrid& g, double mu) {
    const double q = g.wavenumber_unit();
    return 2.0 * mu * q * q;
}

/// Divergence-free single mode u = A cos(k.x + phase) kperp/|k|.
inline VectorField single_mode(const TorusGrid& g, int mx, int my, double amplitude = 1.0,
                               double phase = 0.0) {
    const double ku = g.wavenumber_unit();
    const double kn = std::sqrt(double(mx) * mx + double(my) * my);
    if (kn == 0.0) throw Error("single_mode: zero wavenumber");
    const double p1 = -my / kn, p2 = mx / kn;
    return VectorField::sample(
        g,
        [&](double x, double y) {
            return amplitude * p1 * std::cos(ku * (mx * x + my * y) + phase);
        },
        [&](double x, double y) {
            return amplitude * p2 * std::cos(ku * (mx * x + my * y) + phase);
        });
}

/// Two-valued density patch: inner value inside a disc, outer elsewhere,
/// mollified over mollify_cells grid cells (a sharp jump is not spectrally
/// representable).
inline ScalarField patch_density(const TorusGrid& g, double cx, double cy, double radius,
                                 double inner, double outer, double mollify_cells = 2.0) {
    if (inner <= 0.0 || outer <= 0.0) throw InvalidDensity("patch_density: values must be > 0");
    const double w = mollify_cells * g.spacing();
    const double L = g.length;
    auto smooth01 = [](double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    };
    return ScalarField::sample(g, [&](double x, double y) {
        double dx = std::fabs(x - cx), dy = std::fabs(y - cy);
        dx = std::min(dx, L - dx);
        dy = std::min(dy, L - dy);
        const double d = std::sqrt(dx * dx + dy * dy);
        // transition centered on the interface, width w
        const double s = smooth01((radius + 0.5 * w - d) / w);
        return outer + (inner - outer) * s;
    });
}

/// Shift a velocity by a constant so that integral(rho u) = 0.
inline VectorField remove_weighted_momentum(const ScalarField& rho, const VectorField& u) {
    const double mass = rho.mean();
    const double c1 = multiply(rho, u[0]).mean() / mass;
    const double c2 = multiply(rho, u[1]).mean() / mass;
    std::vector<double> v1 = u[0].values(), v2 = u[1].values();
    for (auto& x : v1) x -= c1;
    for (auto& x : v2) x -= c2;
    return VectorField(ScalarField(u.grid(), std::move(v1)), ScalarField(u.grid(), std::move(v2)));
}

}  // namespace torusns
