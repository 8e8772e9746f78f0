#pragma once

#include <cmath>
#include <vector>

#include "torusns/field.hpp"

namespace torusns {

namespace interp_detail {

/// Lagrange cubic through (-1,p0),(0,p1),(1,p2),(2,p3) evaluated at
/// s in [0,1], written in Newton forward form so constant data is
/// reproduced bit-exactly (all difference terms vanish).
inline double cubic(double p0, double p1, double p2, double p3, double s) {
    const double d1 = p1 - p0;
    const double d2 = p2 - 2.0 * p1 + p0;
    const double d3 = p3 - 3.0 * p2 + 3.0 * p1 - p0;
    return p0 + (s + 1.0) * d1 + 0.5 * (s + 1.0) * s * d2 +
           (s + 1.0) * s * (s - 1.0) * (1.0 / 6.0) * d3;
}

inline int wrap(int i, int n) {
    i %= n;
    return i < 0 ? i + n : i;
}

}  // namespace interp_detail

/// Periodic bicubic sampler over raw row-major samples.
class BicubicSampler {
  public:
    BicubicSampler(const TorusGrid& g, const double* data) : n_(g.n), h_(g.spacing()), data_(data) {}
    BicubicSampler(const TorusGrid& g, const std::vector<double>& data)
        : BicubicSampler(g, data.data()) {}

    /// Sample at world coordinates (x, y); wraps periodically.
    double operator()(double x, double y) const { return at_grid(x / h_, y / h_); }

    /// Sample at fractional grid coordinates.
    double at_grid(double gx, double gy) const {
        double r[4];
        gather_rows(gx, gy, r);
        const double sy = gy - std::floor(gy);
        return interp_detail::cubic(r[0], r[1], r[2], r[3], sy);
    }

    /// As at_grid, but also return the min/max of the 16-point stencil
    /// (used for monotone clipping).
    double at_grid_clipped(double gx, double gy) const {
        using interp_detail::cubic;
        using interp_detail::wrap;
        const int ix0 = int(std::floor(gx)), iy0 = int(std::floor(gy));
        const double sx = gx - ix0, sy = gy - iy0;
        int xi[4], yi[4];
        for (int m = 0; m < 4; ++m) {
            xi[m] = wrap(ix0 - 1 + m, n_);
            yi[m] = wrap(iy0 - 1 + m, n_);
        }
        double r[4], lo = data_[std::size_t(yi[0]) * n_ + xi[0]], hi = lo;
        for (int m = 0; m < 4; ++m) {
            const double* row = data_ + std::size_t(yi[m]) * n_;
            const double p0 = row[xi[0]], p1 = row[xi[1]], p2 = row[xi[2]], p3 = row[xi[3]];
            lo = std::min(lo, std::min(std::min(p0, p1), std::min(p2, p3)));
            hi = std::max(hi, std::max(std::max(p0, p1), std::max(p2, p3)));
            r[m] = cubic(p0, p1, p2, p3, sx);
        }
        const double v = cubic(r[0], r[1], r[2], r[3], sy);
        return v < lo ? lo : (v > hi ? hi : v);
    }

  private:
    void gather_rows(double gx, double gy, double r[4]) const {
        using interp_detail::cubic;
        using interp_detail::wrap;
        const int ix0 = int(std::floor(gx)), iy0 = int(std::floor(gy));
        const double sx = gx - ix0;
        int xi[4];
        for (int m = 0; m < 4; ++m) xi[m] = wrap(ix0 - 1 + m, n_);
        for (int m = 0; m < 4; ++m) {
            const double* row = data_ + std::size_t(wrap(iy0 - 1 + m, n_)) * n_;
            r[m] = cubic(row[xi[0]], row[xi[1]], row[xi[2]], row[xi[3]], sx);
        }
    }

    int n_;
    double h_;
    const double* data_;
};

/// Pair of samplers for a velocity field.
struct VelocitySampler {
    BicubicSampler u1, u2;
    VelocitySampler(const TorusGrid& g, const std::vector<double>& v1, const std::vector<double>& v2)
        : u1(g, v1), u2(g, v2) {}
    void operator()(double x, double y, double& out1, double& out2) const {
        out1 = u1(x, y);
        out2 = u2(x, y);
    }
};

/// Semi-Lagrangian transport of rho by the (frozen) velocity u over one
/// step: RK4 backtrace, bicubic interpolation clipped to the local
/// stencil range, which keeps new values inside [min rho, max rho].
inline std::vector<double> semi_lagrangian_advect(const TorusGrid& g,
                                                  const std::vector<double>& rho,
                                                  const std::vector<double>& u1,
                                                  const std::vector<double>& u2, double dt) {
    const int n = g.n;
    const double h = g.spacing();
    VelocitySampler vel(g, u1, u2);
    BicubicSampler rs(g, rho);
    std::vector<double> out(rho.size());
    for (int iy = 0; iy < n; ++iy) {
        const double y = iy * h;
        for (int ix = 0; ix < n; ++ix) {
            const double x = ix * h;
            double a1, a2, b1, b2, c1, c2, d1, d2;
            vel(x, y, a1, a2);
            vel(x - 0.5 * dt * a1, y - 0.5 * dt * a2, b1, b2);
            vel(x - 0.5 * dt * b1, y - 0.5 * dt * b2, c1, c2);
            vel(x - dt * c1, y - dt * c2, d1, d2);
            const double xd = x - dt / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + d1);
            const double yd = y - dt / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2);
            out[std::size_t(iy) * n + ix] = rs.at_grid_clipped(xd / h, yd / h);
        }
    }
    return out;
}

}  // namespace torusns
