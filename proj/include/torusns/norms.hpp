#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "torusns/spectral.hpp"

namespace torusns {

// ---------------------------------------------------------------------
// Lebesgue norms: equal-weight quadrature of |f|^p; p = inf is the grid
// maximum.  Multi-component fields use the pointwise Euclidean magnitude.
// ---------------------------------------------------------------------

inline double lp_of_components(const TorusGrid& g, const std::vector<const std::vector<double>*>& comps,
                               double p) {
    if (!(p >= 1.0)) throw Error("lebesgue_norm: p must be >= 1");
    const std::size_t m = g.real_size();
    if (std::isinf(p)) {
        double mx = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (auto* c : comps) s += (*c)[i] * (*c)[i];
            mx = std::max(mx, s);
        }
        return std::sqrt(mx);
    }
    const double w = g.quadrature_weight();
    double acc = 0.0;
    if (p == 2.0) {
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (auto* c : comps) s += (*c)[i] * (*c)[i];
            acc += s;
        }
        return std::sqrt(acc * w);
    }
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (auto* c : comps) s += (*c)[i] * (*c)[i];
        acc += std::pow(s, 0.5 * p);
    }
    return std::pow(acc * w, 1.0 / p);
}

inline double lebesgue_norm(const ScalarField& f, double p) {
    return lp_of_components(f.grid(), {&f.values()}, p);
}

inline double lebesgue_norm(const VectorField& f, double p) {
    return lp_of_components(f.grid(), {&f[0].values(), &f[1].values()}, p);
}

// ---------------------------------------------------------------------
// Homogeneous Sobolev norms over mean-free modes.
// ---------------------------------------------------------------------

inline double sobolev_norm_spec(const TorusGrid& g, const std::vector<cplx>& spec, double s) {
    const double ku = g.wavenumber_unit();
    const double area = g.length * g.length;
    double acc = 0.0;
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        const double k2 = double(mx) * mx + double(my) * my;
        if (k2 == 0.0) return;
        const double kmag2 = ku * ku * k2;
        acc += mode_weight(g, mx) * std::pow(kmag2, s) * std::norm(spec[idx]);
    });
    return std::sqrt(area * acc);
}

inline double sobolev_norm(const ScalarField& f, double s) {
    if (s < -2.0 || s > 2.0) throw Error("sobolev_norm: s must lie in [-2, 2]");
    return sobolev_norm_spec(f.grid(), f.spectral(), s);
}

inline double sobolev_norm(const VectorField& f, double s) {
    const double a = sobolev_norm(f[0], s), b = sobolev_norm(f[1], s);
    return std::sqrt(a * a + b * b);
}

// ---------------------------------------------------------------------
// Besov norm: l1 sum of L2 norms of the dyadic blocks.
// ---------------------------------------------------------------------

inline double besov_b021_norm_spec(const TorusGrid& g, const std::vector<cplx>& spec) {
    const auto [jmin, jmax] = lp_band_range(g);
    const double ku = g.wavenumber_unit();
    const double area = g.length * g.length;
    double total = 0.0;
    for (int j = jmin; j <= jmax; ++j) {
        const double scale = std::ldexp(1.0, -j);
        double acc = 0.0;
        for_each_mode(g, [&](std::size_t idx, int mx, int my) {
            const double k2 = double(mx) * mx + double(my) * my;
            if (k2 == 0.0) return;
            const double chi = lp_bump(scale * ku * std::sqrt(k2));
            if (chi != 0.0) acc += mode_weight(g, mx) * chi * chi * std::norm(spec[idx]);
        });
        total += std::sqrt(area * acc);
    }
    return total;
}

inline double besov_b021_norm(const ScalarField& f) {
    return besov_b021_norm_spec(f.grid(), f.spectral());
}

inline double besov_b021_norm(const VectorField& f) {
    // block-wise l2 over both components, then l1 over blocks
    const TorusGrid& g = f.grid();
    const auto [jmin, jmax] = lp_band_range(g);
    const double ku = g.wavenumber_unit();
    const double area = g.length * g.length;
    const auto &s1 = f[0].spectral(), &s2 = f[1].spectral();
    double total = 0.0;
    for (int j = jmin; j <= jmax; ++j) {
        const double scale = std::ldexp(1.0, -j);
        double acc = 0.0;
        for_each_mode(g, [&](std::size_t idx, int mx, int my) {
            const double k2 = double(mx) * mx + double(my) * my;
            if (k2 == 0.0) return;
            const double chi = lp_bump(scale * ku * std::sqrt(k2));
            if (chi != 0.0)
                acc += mode_weight(g, mx) * chi * chi * (std::norm(s1[idx]) + std::norm(s2[idx]));
        });
        total += std::sqrt(area * acc);
    }
    return total;
}

// ---------------------------------------------------------------------
// Derivative component lists (Frobenius magnitude conventions).
// ---------------------------------------------------------------------

inline std::vector<ScalarField> grad_components(const ScalarField& z) {
    return {derivative(z, 1), derivative(z, 2)};
}

inline std::vector<ScalarField> grad_components(const VectorField& z) {
    return {derivative(z[0], 1), derivative(z[0], 2), derivative(z[1], 1), derivative(z[1], 2)};
}

template <class Field>
inline std::vector<ScalarField> hess_components(const Field& z) {
    std::vector<ScalarField> h;
    for (const ScalarField& d : grad_components(z)) {
        h.push_back(derivative(d, 1));
        h.push_back(derivative(d, 2));
    }
    return h;
}

inline double lp_of_fields(const TorusGrid& g, const std::vector<ScalarField>& fs, double p) {
    std::vector<const std::vector<double>*> comps;
    comps.reserve(fs.size());
    for (const auto& f : fs) comps.push_back(&f.values());
    return lp_of_components(g, comps, p);
}

// ---------------------------------------------------------------------
// Functional-inequality checkers.  Each returns the measured LHS/RHS
// ratio; the inequalities hold iff the ratio stays below the (unknown)
// constant, so ratios are reported, never asserted against fixed values.
// ---------------------------------------------------------------------

namespace norms_detail {

template <class Field>
Field subtract_mean(const Field& z);

inline ScalarField subtract_mean_scalar(const ScalarField& z) {
    std::vector<cplx> s = z.spectral();
    s[0] = 0.0;
    return ScalarField::from_spectral(z.grid(), std::move(s));
}

template <>
inline ScalarField subtract_mean<ScalarField>(const ScalarField& z) {
    return subtract_mean_scalar(z);
}

template <>
inline VectorField subtract_mean<VectorField>(const VectorField& z) {
    return VectorField(subtract_mean_scalar(z[0]), subtract_mean_scalar(z[1]));
}

}  // namespace norms_detail

/// ||z||_{L4}^2 / (||z||_{L2} ||grad z||_{L2}) on the mean-free part.
template <class Field>
double check_ladyzhenskaya(const Field& z_in) {
    const Field z = norms_detail::subtract_mean<Field>(z_in);
    const double l2 = lebesgue_norm(z, 2.0);
    if (l2 == 0.0) throw DegenerateInput("check_ladyzhenskaya: z is identically zero");
    const double l4 = lebesgue_norm(z, 4.0);
    const double g2 = lp_of_fields(z.grid(), grad_components(z), 2.0);
    return l4 * l4 / (l2 * g2);
}

/// ||z||_{Lp} / (||z||_{L2}^{2/p} ||grad z||_{L2}^{1-2/p}), 2 <= p < inf.
template <class Field>
double check_gn(const Field& z_in, double p) {
    if (!(p >= 2.0) || std::isinf(p)) throw InvalidExponents("check_gn: need 2 <= p < inf");
    const Field z = norms_detail::subtract_mean<Field>(z_in);
    const double l2 = lebesgue_norm(z, 2.0);
    if (l2 == 0.0) throw DegenerateInput("check_gn: z is identically zero");
    const double lp = lebesgue_norm(z, p);
    const double g2 = lp_of_fields(z.grid(), grad_components(z), 2.0);
    return lp / (std::pow(l2, 2.0 / p) * std::pow(g2, 1.0 - 2.0 / p));
}

/// Weighted variant: z is shifted so that the a-weighted integral is 0,
/// and the right-hand side carries the log factor in ||a||_{L2}.
template <class Field>
double check_gn_weighted(const Field& z_in, const ScalarField& a_in, double p) {
    if (!(p >= 2.0) || std::isinf(p)) throw InvalidExponents("check_gn_weighted: need 2 <= p < inf");
    const double amean = a_in.mean();
    if (!(amean > 0.0)) throw InvalidWeight("check_gn_weighted: weight must have positive mean");
    const ScalarField a = (1.0 / amean) * a_in;

    auto shift = [&](const ScalarField& z) {
        // c such that integral(a * (z - c)) = 0
        const double az = multiply(a, z).mean();
        std::vector<double> v = z.values();
        for (auto& x : v) x -= az;  // mean(a) = 1
        return ScalarField(z.grid(), std::move(v));
    };
    Field z = z_in;
    if constexpr (std::is_same_v<Field, ScalarField>) {
        z = shift(z_in);
    } else {
        z = VectorField(shift(z_in[0]), shift(z_in[1]));
    }

    const double l2 = lebesgue_norm(z, 2.0);
    if (l2 == 0.0) throw DegenerateInput("check_gn_weighted: z is identically zero");
    const double lp = lebesgue_norm(z, p);
    const double g2 = lp_of_fields(z.grid(), grad_components(z), 2.0);
    const double logf = std::pow(std::log(std::numbers::e + lebesgue_norm(a, 2.0)), (p - 2.0) / p);
    return lp / (std::pow(l2, 2.0 / p) * std::pow(g2, 1.0 - 2.0 / p) * logf);
}

/// ||z||_{Linf} / (||z||_{L4}^{1/2} ||grad z||_{L4}^{1/2}).
template <class Field>
double check_gn_inf(const Field& z_in) {
    const Field z = norms_detail::subtract_mean<Field>(z_in);
    const double l4 = lebesgue_norm(z, 4.0);
    if (l4 == 0.0) throw DegenerateInput("check_gn_inf: z is identically zero");
    const double linf = lebesgue_norm(z, std::numeric_limits<double>::infinity());
    const double g4 = lp_of_fields(z.grid(), grad_components(z), 4.0);
    return linf / (std::sqrt(l4) * std::sqrt(g4));
}

/// ||grad z||_{Linf} / (||z||_{L4}^{1/4} ||grad^2 z||_{L4}^{3/4}).
template <class Field>
double check_gn_grad_inf(const Field& z_in) {
    const Field z = norms_detail::subtract_mean<Field>(z_in);
    const double l4 = lebesgue_norm(z, 4.0);
    if (l4 == 0.0) throw DegenerateInput("check_gn_grad_inf: z is identically zero");
    const double ginf =
        lp_of_fields(z.grid(), grad_components(z), std::numeric_limits<double>::infinity());
    const double h4 = lp_of_fields(z.grid(), hess_components(z), 4.0);
    return ginf / (std::pow(l4, 0.25) * std::pow(h4, 0.75));
}

// ---------------------------------------------------------------------
// NormReport: the serializable bundle of all norms of one field.
// ---------------------------------------------------------------------

struct NormReport {
    double l2 = 0.0;
    std::map<double, double> h_s;   // s -> homogeneous Sobolev norm
    std::map<double, double> lp;    // p -> Lebesgue norm
    double linf = 0.0;
    double besov_b021 = 0.0;
    double weighted_besov_upper = 0.0;  // 0 unless a density was supplied
};

inline std::string trim_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

inline nlohmann::json to_json(const NormReport& r) {
    nlohmann::json j;
    j["l2"] = r.l2;
    for (const auto& [s, v] : r.h_s) j["hs:" + trim_number(s)] = v;
    for (const auto& [p, v] : r.lp) j["lp:" + trim_number(p)] = v;
    j["linf"] = r.linf;
    j["b021"] = r.besov_b021;
    j["btilde_upper"] = r.weighted_besov_upper;
    return j;
}

// ---------------------------------------------------------------------
// Atomic decompositions for the density-weighted interpolation space.
// The canonical decomposition takes the Leray projection of each dyadic
// block; the resulting tally is an upper bound on the infimum norm.
// ---------------------------------------------------------------------

struct Atom {
    int j = 0;
    VectorField field;
    double hs_norm = 0.0;    // ||u_{0,j}||_{H^s}
    double hneg_norm = 0.0;  // ||P(rho0 u_{0,j})||_{H^-s}
};

struct AtomDecomposition {
    std::vector<Atom> atoms;
    double s = 0.5;
    double weight_tally = 0.0;
    std::array<double, 2> mean_part{0.0, 0.0};  // carried separately; blocks kill the mean
    double subtracted_mean_max = 0.0;  // largest |mean| removed before a H^-s evaluation
};

/// H^{-s} norm of P(rho z) evaluated on the mean-free part; the removed
/// mean magnitude is reported through *mean_out when nonnull.
inline double weighted_hneg_norm(const VectorField& z, const ScalarField& rho, double s,
                                 double* mean_out = nullptr) {
    VectorField rz = dealias(multiply(rho, z));
    if (mean_out) {
        const double m1 = rz[0].mean(), m2 = rz[1].mean();
        *mean_out = std::sqrt(m1 * m1 + m2 * m2);
    }
    return sobolev_norm(leray_project(rz), -s);
}

inline AtomDecomposition atomic_decompose(const VectorField& u0, const ScalarField& rho0,
                                          double s = 0.5) {
    if (!(s > 0.0 && s < 1.0)) throw Error("atomic_decompose: s must lie in (0,1)");
    if (rho0.min() <= 0.0) throw InvalidDensity("atomic_decompose: density must be positive");
    const TorusGrid& g = u0.grid();

    AtomDecomposition dec;
    dec.s = s;
    dec.mean_part = {u0[0].mean(), u0[1].mean()};

    const auto [jmin, jmax] = lp_band_range(g);
    const double tiny = 1e-14 * (sobolev_norm(u0, 0.0) + 1e-300);
    for (int j = jmin; j <= jmax; ++j) {
        Atom a;
        a.j = j;
        a.field = leray_project(lp_block(u0, j));
        if (sobolev_norm(a.field, 0.0) <= tiny) continue;
        a.hs_norm = sobolev_norm(a.field, s);
        double mean_removed = 0.0;
        a.hneg_norm = weighted_hneg_norm(a.field, rho0, s, &mean_removed);
        dec.subtracted_mean_max = std::max(dec.subtracted_mean_max, mean_removed);
        dec.weight_tally +=
            std::pow(2.0, -0.5 * j) * a.hs_norm + std::pow(2.0, 0.5 * j) * a.hneg_norm;
        dec.atoms.push_back(std::move(a));
    }
    return dec;
}

/// All norms of one field; a density enables the weighted tally entry.
template <class Field>
NormReport compute_norm_report(const Field& f, const ScalarField* rho = nullptr, double s = 0.5,
                               const std::vector<double>& s_samples = {-1.0, -0.5, 0.0, 0.5, 1.0,
                                                                       1.5, 2.0},
                               const std::vector<double>& p_samples = {1.0, 2.0, 4.0, 6.0}) {
    NormReport r;
    r.l2 = lebesgue_norm(f, 2.0);
    for (double ss : s_samples) r.h_s[ss] = sobolev_norm(f, ss);
    for (double pp : p_samples) r.lp[pp] = lebesgue_norm(f, pp);
    r.linf = lebesgue_norm(f, std::numeric_limits<double>::infinity());
    r.besov_b021 = besov_b021_norm(f);
    if (rho) {
        if constexpr (std::is_same_v<Field, VectorField>) {
            r.weighted_besov_upper = atomic_decompose(f, *rho, s).weight_tally;
        }
    }
    return r;
}

}  // namespace torusns
