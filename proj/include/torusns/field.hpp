#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "torusns/grid.hpp"

namespace torusns {

/// Immutable scalar field on a TorusGrid.  Holds real samples and the
/// half-complex spectrum; whichever representation was not supplied at
/// construction is computed on first access (thread-safe, shared across
/// copies).
class ScalarField {
  public:
    ScalarField() = default;

    ScalarField(const TorusGrid& grid, std::vector<double> values)
        : grid_(grid), repr_(std::make_shared<Repr>()) {
        if (values.size() != grid.real_size()) throw Error("ScalarField: bad values size");
        repr_->values = std::move(values);
        repr_->has_values = true;
    }

    static ScalarField from_spectral(const TorusGrid& grid, std::vector<cplx> spec) {
        if (spec.size() != grid.spectral_size()) throw Error("ScalarField: bad spectral size");
        enforce_hermitian(grid, spec);
        ScalarField f;
        f.grid_ = grid;
        f.repr_ = std::make_shared<Repr>();
        f.repr_->spectral = std::move(spec);
        f.repr_->has_spectral = true;
        return f;
    }

    static ScalarField zero(const TorusGrid& grid) {
        return ScalarField(grid, std::vector<double>(grid.real_size(), 0.0));
    }

    static ScalarField constant(const TorusGrid& grid, double c) {
        return ScalarField(grid, std::vector<double>(grid.real_size(), c));
    }

    /// Sample an (x,y) -> value function at the grid nodes.
    template <class F>
    static ScalarField sample(const TorusGrid& grid, F&& f) {
        std::vector<double> v(grid.real_size());
        const double h = grid.spacing();
        for (int iy = 0; iy < grid.n; ++iy)
            for (int ix = 0; ix < grid.n; ++ix)
                v[std::size_t(iy) * grid.n + ix] = f(ix * h, iy * h);
        return ScalarField(grid, std::move(v));
    }

    bool empty() const { return !repr_; }
    const TorusGrid& grid() const { return grid_; }

    const std::vector<double>& values() const {
        std::call_once(repr_->values_once, [this] {
            if (!repr_->has_values) {
                repr_->values.resize(grid_.real_size());
                fft_backward(grid_, repr_->spectral.data(), repr_->values.data());
                repr_->has_values = true;
            }
        });
        return repr_->values;
    }

    const std::vector<cplx>& spectral() const {
        std::call_once(repr_->spectral_once, [this] {
            if (!repr_->has_spectral) {
                repr_->spectral.resize(grid_.spectral_size());
                fft_forward(grid_, repr_->values.data(), repr_->spectral.data());
                repr_->has_spectral = true;
            }
        });
        return repr_->spectral;
    }

    double mean() const {
        if (repr_->has_spectral) return spectral()[0].real();
        const auto& v = values();
        double s = 0.0;
        for (double x : v) s += x;
        return s / v.size();
    }

    double min() const {
        const auto& v = values();
        return *std::min_element(v.begin(), v.end());
    }
    double max() const {
        const auto& v = values();
        return *std::max_element(v.begin(), v.end());
    }

  private:
    struct Repr {
        mutable std::once_flag values_once, spectral_once;
        mutable std::vector<double> values;
        mutable std::vector<cplx> spectral;
        mutable bool has_values = false;
        mutable bool has_spectral = false;
    };

    TorusGrid grid_;
    std::shared_ptr<Repr> repr_;
};

/// Two scalar components on a shared grid.
class VectorField {
  public:
    VectorField() = default;
    VectorField(ScalarField c1, ScalarField c2) : c_{std::move(c1), std::move(c2)} {
        if (!(c_[0].grid() == c_[1].grid())) throw Error("VectorField: component grids differ");
    }

    static VectorField zero(const TorusGrid& grid) {
        return VectorField(ScalarField::zero(grid), ScalarField::zero(grid));
    }

    template <class F1, class F2>
    static VectorField sample(const TorusGrid& grid, F1&& f1, F2&& f2) {
        return VectorField(ScalarField::sample(grid, f1), ScalarField::sample(grid, f2));
    }

    bool empty() const { return c_[0].empty(); }
    const TorusGrid& grid() const { return c_[0].grid(); }
    const ScalarField& operator[](int i) const { return c_[i]; }

  private:
    std::array<ScalarField, 2> c_;
};

// ---- small field algebra (value-returning, used off the hot path) ----

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    std::vector<double> v = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += bv[i];
    return ScalarField(a.grid(), std::move(v));
}

inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    std::vector<double> v = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= bv[i];
    return ScalarField(a.grid(), std::move(v));
}

inline ScalarField operator*(double s, const ScalarField& a) {
    std::vector<double> v = a.values();
    for (auto& x : v) x *= s;
    return ScalarField(a.grid(), std::move(v));
}

inline ScalarField multiply(const ScalarField& a, const ScalarField& b) {
    std::vector<double> v = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= bv[i];
    return ScalarField(a.grid(), std::move(v));
}

inline VectorField operator+(const VectorField& a, const VectorField& b) {
    return VectorField(a[0] + b[0], a[1] + b[1]);
}
inline VectorField operator-(const VectorField& a, const VectorField& b) {
    return VectorField(a[0] - b[0], a[1] - b[1]);
}
inline VectorField operator*(double s, const VectorField& a) {
    return VectorField(s * a[0], s * a[1]);
}
inline VectorField multiply(const ScalarField& a, const VectorField& b) {
    return VectorField(multiply(a, b[0]), multiply(a, b[1]));
}

}  // namespace torusns
