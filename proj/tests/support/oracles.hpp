#pragma once

// Test-side oracles, kept independent of the library's norm and transform
// paths: plain trapezoidal quadrature of closed-form integrands on a fine
// grid (spectrally accurate for smooth periodic functions), and a brute
// force mode-space convolution.

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace oracles {

using Fn2 = std::function<double(double, double)>;

/// integral over [0,L)^2 of f, equal-weight quadrature on an nq x nq grid.
inline double integrate(double L, const Fn2& f, int nq = 512) {
    const double h = L / nq;
    double acc = 0.0;
    for (int iy = 0; iy < nq; ++iy)
        for (int ix = 0; ix < nq; ++ix) acc += f(ix * h, iy * h);
    return acc * h * h;
}

inline double lp_norm(double L, const Fn2& f, double p, int nq = 512) {
    return std::pow(integrate(L, [&](double x, double y) { return std::pow(std::fabs(f(x, y)), p); },
                              nq),
                    1.0 / p);
}

inline double max_abs(double L, const Fn2& f, int nq = 2048) {
    const double h = L / nq;
    double m = 0.0;
    for (int iy = 0; iy < nq; ++iy)
        for (int ix = 0; ix < nq; ++ix) m = std::max(m, std::fabs(f(ix * h, iy * h)));
    return m;
}

/// Brute-force convolution of two coefficient maps (mode -> coefficient).
using ModeMap = std::map<std::pair<int, int>, std::complex<double>>;

inline ModeMap convolve(const ModeMap& a, const ModeMap& b) {
    ModeMap out;
    for (const auto& [ka, ca] : a)
        for (const auto& [kb, cb] : b)
            out[{ka.first + kb.first, ka.second + kb.second}] += ca * cb;
    return out;
}

/// Trapezoid with nonuniform nodes.
inline double trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) acc += 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
    return acc;
}

}  // namespace oracles
