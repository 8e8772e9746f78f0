#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "torusns/errors.hpp"

namespace torusns {

using cplx = std::complex<double>;

/// Uniform discretization of the square torus [0,L)^2 with n points per
/// dimension.  Real samples are stored row-major, x fastest:
/// values[iy*n + ix] at (x,y) = (ix*h, iy*h), h = L/n.
/// Spectra use the half-complex r2c layout: spectral[iy*(n/2+1) + jx]
/// holds the coefficient of exp(i*k.x) with integer mode (mx,my),
/// mx = jx in [0, n/2], my = iy for iy <= n/2 else iy - n, and
/// k = (2*pi/L)*(mx,my).  Coefficients are normalized so that
/// f(x) = sum_k c(k) exp(i k.x).
struct TorusGrid {
    int n = 0;
    double length = 2.0 * std::numbers::pi;

    TorusGrid() = default;
    TorusGrid(int n_, double length_ = 2.0 * std::numbers::pi) : n(n_), length(length_) {
        if (n < 8 || n % 2 != 0) throw Error("TorusGrid: n must be even and >= 8");
        if (!(length > 0)) throw Error("TorusGrid: length must be positive");
    }

    double spacing() const { return length / n; }
    double quadrature_weight() const { return spacing() * spacing(); }
    /// Physical wavenumber per integer mode, 2*pi/L.
    double wavenumber_unit() const { return 2.0 * std::numbers::pi / length; }
    /// Largest resolvable |k| along an axis.
    double nyquist_wavenumber() const { return wavenumber_unit() * (n / 2); }

    int cols() const { return n / 2 + 1; }
    std::size_t real_size() const { return std::size_t(n) * n; }
    std::size_t spectral_size() const { return std::size_t(n) * cols(); }

    friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
        return a.n == b.n && a.length == b.length;
    }
};

/// Visit every stored spectral mode: f(index, mx, my) with signed my.
template <class F>
inline void for_each_mode(const TorusGrid& g, F&& f) {
    const int n = g.n, ncol = g.cols();
    for (int iy = 0; iy < n; ++iy) {
        const int my = (iy <= n / 2) ? iy : iy - n;
        const std::size_t row = std::size_t(iy) * ncol;
        for (int jx = 0; jx < ncol; ++jx) f(row + jx, jx, my);
    }
}

/// Hermitian multiplicity of a stored mode (interior kx columns represent
/// a conjugate pair).
inline double mode_weight(const TorusGrid& g, int mx) {
    return (mx == 0 || mx == g.n / 2) ? 1.0 : 2.0;
}

namespace detail {

// One FFTW plan pair per grid size, shared across threads.  Plans are
// created on fftw_malloc'd scratch so the new-array execute interface is
// valid for any fftw_malloc'd buffer of the same size.
class PlanRegistry {
  public:
    struct Plans {
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
    };

    static const Plans& get(int n) {
        static PlanRegistry reg;
        std::lock_guard<std::mutex> lock(reg.mutex_);
        auto it = reg.plans_.find(n);
        if (it != reg.plans_.end()) return it->second;

        const std::size_t rn = std::size_t(n) * n;
        const std::size_t cn = std::size_t(n) * (n / 2 + 1);
        double* r = fftw_alloc_real(rn);
        fftw_complex* c = fftw_alloc_complex(cn);
        Plans p;
        p.fwd = fftw_plan_dft_r2c_2d(n, n, r, c, FFTW_ESTIMATE);
        p.bwd = fftw_plan_dft_c2r_2d(n, n, c, r, FFTW_ESTIMATE);
        fftw_free(r);
        fftw_free(c);
        return reg.plans_.emplace(n, p).first->second;
    }

  private:
    PlanRegistry() = default;
    ~PlanRegistry() {
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.fwd);
            fftw_destroy_plan(p.bwd);
        }
    }
    std::mutex mutex_;
    std::map<int, Plans> plans_;
};

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

// Per-thread scratch: c2r destroys its input, and new-array execution
// requires fftw_malloc alignment, so both directions copy through here.
struct Scratch {
    std::unique_ptr<double, FftwDeleter> r;
    std::unique_ptr<fftw_complex, FftwDeleter> c;
    int n = 0;
    void ensure(int nn) {
        if (n == nn) return;
        r.reset(fftw_alloc_real(std::size_t(nn) * nn));
        c.reset(fftw_alloc_complex(std::size_t(nn) * (nn / 2 + 1)));
        n = nn;
    }
};

inline Scratch& scratch() {
    thread_local Scratch s;
    return s;
}

}  // namespace detail

/// Real samples -> normalized spectral coefficients.
inline void fft_forward(const TorusGrid& g, const double* values, cplx* spectral) {
    auto& s = detail::scratch();
    s.ensure(g.n);
    std::copy(values, values + g.real_size(), s.r.get());
    const auto& plans = detail::PlanRegistry::get(g.n);
    fftw_execute_dft_r2c(plans.fwd, s.r.get(), s.c.get());
    const double scale = 1.0 / g.real_size();
    const cplx* cs = reinterpret_cast<const cplx*>(s.c.get());
    for (std::size_t i = 0; i < g.spectral_size(); ++i) spectral[i] = cs[i] * scale;
}

/// Normalized spectral coefficients -> real samples.
inline void fft_backward(const TorusGrid& g, const cplx* spectral, double* values) {
    auto& s = detail::scratch();
    s.ensure(g.n);
    cplx* cs = reinterpret_cast<cplx*>(s.c.get());
    std::copy(spectral, spectral + g.spectral_size(), cs);
    const auto& plans = detail::PlanRegistry::get(g.n);
    fftw_execute_dft_c2r(plans.bwd, s.c.get(), s.r.get());
    std::copy(s.r.get(), s.r.get() + g.real_size(), values);
}

/// Symmetrize the kx = 0 and kx = n/2 columns so the half-complex array
/// describes a real field.  Idempotent on already-valid arrays.
inline void enforce_hermitian(const TorusGrid& g, std::vector<cplx>& spec) {
    const int n = g.n, ncol = g.cols();
    for (int jx : {0, n / 2}) {
        spec[jx] = cplx(spec[jx].real(), 0.0);
        spec[std::size_t(n / 2) * ncol + jx] =
            cplx(spec[std::size_t(n / 2) * ncol + jx].real(), 0.0);
        for (int iy = 1; iy < n / 2; ++iy) {
            const std::size_t a = std::size_t(iy) * ncol + jx;
            const std::size_t b = std::size_t(n - iy) * ncol + jx;
            const cplx v = 0.5 * (spec[a] + std::conj(spec[b]));
            spec[a] = v;
            spec[b] = std::conj(v);
        }
    }
}

}  // namespace torusns
