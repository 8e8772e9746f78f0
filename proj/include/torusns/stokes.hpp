#pragma once

#include "torusns/norms.hpp"
#include "torusns/spectral.hpp"

namespace torusns {

/// Solution of -Laplace(w) + grad(q) = f, div w = g on the torus, pinned
/// by mean(w) = 0 and mean(q) = 0.
struct StokesSolution {
    VectorField w;
    ScalarField q;
    VectorField grad_q;
};

/// Torus recipe: Laplace(q) = div f + Laplace(g), then a Poisson solve for
/// each velocity component.  The mean of f contributes no bounded solution
/// and is dropped.
inline StokesSolution solve_stokes(const VectorField& f, const ScalarField& g) {
    const TorusGrid& grid = f.grid();
    if (!(grid == g.grid())) throw Error("solve_stokes: grids differ");
    const double gscale = lebesgue_norm(g, 2.0);
    if (std::abs(g.mean()) > 1e-12 * std::max(gscale, 1e-300))
        throw MeanConstraintViolated("solve_stokes: div data must have zero mean");

    // q = inv_laplace(div f) + g, mean-free
    ScalarField q_part = inverse_laplacian(divergence(f));
    std::vector<cplx> qs = q_part.spectral();
    {
        const auto& gs = g.spectral();
        for (std::size_t i = 1; i < qs.size(); ++i) qs[i] += gs[i];
        qs[0] = 0.0;
    }
    ScalarField q = ScalarField::from_spectral(grid, std::move(qs));
    VectorField grad_q = gradient(q);

    // -Laplace(w) = f - grad q  (mean-free right side), so w = -inv_laplace(...)
    VectorField rhs = f - grad_q;
    ScalarField w1 = -1.0 * inverse_laplacian(rhs[0]);
    ScalarField w2 = -1.0 * inverse_laplacian(rhs[1]);
    return {VectorField(std::move(w1), std::move(w2)), std::move(q), std::move(grad_q)};
}

/// Monitored regularity ratio ||grad^2 w, grad q||_{Lp} / (||f||_{Lp} + ||grad g||_{Lp}).
inline double stokes_lp_ratio(const StokesSolution& sol, const VectorField& f, const ScalarField& g,
                              double p) {
    std::vector<ScalarField> lhs = hess_components(sol.w);
    lhs.push_back(sol.grad_q[0]);
    lhs.push_back(sol.grad_q[1]);
    const double num = lp_of_fields(f.grid(), lhs, p);
    const double den = lebesgue_norm(f, p) + lp_of_fields(g.grid(), grad_components(g), p);
    return den > 0.0 ? num / den : 0.0;
}

/// Right inverse of the divergence, -(-Laplace)^{-1} grad div: extracts the
/// gradient part, so div(B k) = div k and B annihilates divergence-free
/// fields.  Requires mean-free input on the torus.
inline VectorField bogovskii(const VectorField& k) {
    const double scale = lebesgue_norm(k, 2.0);
    const double m1 = k[0].mean(), m2 = k[1].mean();
    if (std::sqrt(m1 * m1 + m2 * m2) > 1e-12 * std::max(scale, 1e-300))
        throw MeanConstraintViolated("bogovskii: input must be mean-free");
    return gradient_part(k);
}

/// ||grad (-Laplace)^{-1} f||_{Lp}; realizes the negative Lebesgue-Sobolev
/// norm W^{-1,p} on mean-free data.  Coincides with the H^{-1} norm at p=2.
inline double wminus1p_norm(const ScalarField& f_in, double p) {
    if (!(p >= 2.0)) throw InvalidExponents("wminus1p_norm: need p >= 2");
    ScalarField f = norms_detail::subtract_mean<ScalarField>(f_in);
    ScalarField phi = -1.0 * inverse_laplacian(f);  // (-Laplace)^{-1} f
    return lp_of_fields(f.grid(), grad_components(phi), p);
}

}  // namespace torusns
