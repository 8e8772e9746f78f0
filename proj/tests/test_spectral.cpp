#include <catch2/catch_amalgamated.hpp>

#include "support/oracles.hpp"
#include "torusns/data.hpp"
#include "torusns/norms.hpp"

using namespace torusns;

namespace {
double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    const auto &av = a.values(), &bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) m = std::max(m, std::fabs(av[i] - bv[i]));
    return m;
}
}  // namespace

TEST_CASE("derivative: exact eigenfunctions") {
    TorusGrid g(64);
    ScalarField sinx = ScalarField::sample(g, [](double x, double) { return std::sin(x); });
    ScalarField cosx = ScalarField::sample(g, [](double x, double) { return std::cos(x); });
    CHECK(max_abs_diff(derivative(sinx, 1), cosx) < 1e-12);

    ScalarField c = ScalarField::constant(g, 3.7);
    CHECK(lebesgue_norm(derivative(c, 1), 2.0) < 1e-13);
    CHECK(lebesgue_norm(derivative(c, 2), 2.0) < 1e-13);

    // d^2/dy^2 sin(x + 2y) = -4 sin(x + 2y)
    ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::sin(x + 2 * y); });
    ScalarField want = -4.0 * f;
    CHECK(max_abs_diff(derivative(f, 2, 2), want) < 1e-11);

    // mean of a first derivative is exactly zero
    ScalarField r = random_band_scalar(g, 0, 4, 5, 1.0);
    CHECK(std::fabs(derivative(r, 1).mean()) < 1e-15);
}

TEST_CASE("leray projector: gradients annihilated, solenoidal fields fixed") {
    TorusGrid g(64);
    // w = grad(sin x) = (cos x, 0) -> 0
    VectorField grad_sinx(ScalarField::sample(g, [](double x, double) { return std::cos(x); }),
                          ScalarField::zero(g));
    VectorField p = leray_project(grad_sinx);
    CHECK(sobolev_norm(p, 0.0) < 1e-12);

    // w = (sin y, 0) is already divergence-free
    VectorField shear(ScalarField::sample(g, [](double, double y) { return std::sin(y); }),
                      ScalarField::zero(g));
    VectorField q = leray_project(shear);
    CHECK(max_abs_diff(q[0], shear[0]) < 1e-12);
    CHECK(lebesgue_norm(q[1], 2.0) < 1e-13);

    // single mode k=(1,1): (I - kk^T/|k|^2) (1,0) = (1/2, -1/2)
    ScalarField s = ScalarField::sample(g, [](double x, double y) { return std::sin(x + y); });
    VectorField w(s, ScalarField::zero(g));
    VectorField pr = leray_project(w);
    CHECK(max_abs_diff(pr[0], 0.5 * s) < 1e-12);
    CHECK(max_abs_diff(pr[1], -0.5 * s) < 1e-12);
}

TEST_CASE("leray projector properties on random fields") {
    TorusGrid g(64);
    VectorField w(random_band_scalar(g, 0, 4, 11, 1.0), random_band_scalar(g, 0, 4, 12, 1.0));
    VectorField pw = leray_project(w);
    const double wl2 = sobolev_norm(w, 0.0);

    // divergence of the output vanishes
    CHECK(sobolev_norm(divergence(pw), 0.0) < 1e-11 * wl2);
    // mean preserved
    CHECK(std::fabs(pw[0].mean() - w[0].mean()) < 1e-14);

    // idempotence
    VectorField ppw = leray_project(pw);
    CHECK(sobolev_norm(ppw - pw, 0.0) <= 1e-11 * wl2);

    // orthogonality to gradients
    ScalarField phi = random_band_scalar(g, 0, 4, 13, 1.0);
    VectorField gp = gradient(phi);
    const auto &a1 = pw[0].values(), &a2 = pw[1].values();
    const auto &b1 = gp[0].values(), &b2 = gp[1].values();
    double dot = 0.0;
    for (std::size_t i = 0; i < a1.size(); ++i) dot += a1[i] * b1[i] + a2[i] * b2[i];
    dot *= g.quadrature_weight();
    CHECK(std::fabs(dot) <= 1e-10 * sobolev_norm(pw, 0.0) * sobolev_norm(gp, 0.0));
}

TEST_CASE("lp_block: partition of unity and band errors") {
    TorusGrid g(64);
    const auto [jmin, jmax] = lp_band_range(g);
    CHECK(jmin == 0);

    // spectrum only at |k| = 1 lands entirely in block j=0
    ScalarField s1 = ScalarField::sample(g, [](double x, double) { return std::sin(x); });
    CHECK(max_abs_diff(lp_block(s1, 0), s1) < 1e-12);
    for (int j = 1; j <= jmax; ++j) CHECK(lebesgue_norm(lp_block(s1, j), 2.0) < 1e-13);

    // constant killed by every block
    ScalarField c = ScalarField::constant(g, 2.0);
    for (int j = jmin; j <= jmax; ++j) CHECK(lebesgue_norm(lp_block(c, j), 2.0) < 1e-13);

    // reconstruction: sum of blocks + mean = f
    ScalarField f = random_band_scalar(g, 0, 4, 21, 1.0) + ScalarField::constant(g, 0.4);
    ScalarField acc = ScalarField::constant(g, f.mean());
    for (int j = jmin; j <= jmax; ++j) acc = acc + lp_block(f, j);
    CHECK(max_abs_diff(acc, f) < 1e-10 * lebesgue_norm(f, std::numeric_limits<double>::infinity()));

    CHECK_THROWS_AS(lp_block(f, jmax + 1), BandOutOfRange);
    CHECK_THROWS_AS(lp_block(f, jmin - 1), BandOutOfRange);
}

TEST_CASE("derivative commutes with lp_block") {
    TorusGrid g(64);
    ScalarField f = random_band_scalar(g, 0, 4, 31, 1.0);
    ScalarField a = derivative(lp_block(f, 2), 1);
    ScalarField b = lp_block(derivative(f, 1), 2);
    CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("inverse laplacian") {
    TorusGrid g(64);
    ScalarField cosx = ScalarField::sample(g, [](double x, double) { return std::cos(x); });
    CHECK(max_abs_diff(inverse_laplacian(cosx), -1.0 * cosx) < 1e-12);

    CHECK(lebesgue_norm(inverse_laplacian(ScalarField::zero(g)), 2.0) == 0.0);

    ScalarField s2 = ScalarField::sample(g, [](double x, double) { return std::sin(2 * x); });
    CHECK(max_abs_diff(inverse_laplacian(s2), -0.25 * s2) < 1e-12);

    // Laplace(out) = f - mean(f), zero-mean output
    ScalarField f = random_band_scalar(g, 0, 3, 9, 1.0) + ScalarField::constant(g, 1.1);
    ScalarField out = inverse_laplacian(f);
    CHECK(std::fabs(out.mean()) < 1e-14);
    ScalarField back = laplacian(out) + ScalarField::constant(g, f.mean());
    CHECK(max_abs_diff(back, f) < 1e-10);
}

TEST_CASE("dealiased product equals exact convolution for narrow bands") {
    TorusGrid g(64);
    // band-limited factors with combined bandwidth below 2n/3
    ScalarField f = random_band_scalar(g, 0, 3, 41, 1.0);  // |k| < 16
    ScalarField h = random_band_scalar(g, 0, 2, 43, 1.0);  // |k| < 8
    ScalarField prod = multiply(f, h);

    // oracle: brute-force convolution of the coefficient maps
    oracles::ModeMap fm, hm;
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        if (std::abs(f.spectral()[idx]) > 0) {
            fm[{mx, my}] = f.spectral()[idx];
            if (mx != 0 && mx != g.n / 2) fm[{-mx, -my}] = std::conj(f.spectral()[idx]);
        }
        if (std::abs(h.spectral()[idx]) > 0) {
            hm[{mx, my}] = h.spectral()[idx];
            if (mx != 0 && mx != g.n / 2) hm[{-mx, -my}] = std::conj(h.spectral()[idx]);
        }
    });
    oracles::ModeMap conv = oracles::convolve(fm, hm);

    const auto& ps = prod.spectral();
    double err = 0.0;
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        cplx want(0.0);
        auto it = conv.find({mx, my});
        if (it != conv.end()) want = it->second;
        err = std::max(err, std::abs(ps[idx] - want));
    });
    CHECK(err < 1e-12);
}

TEST_CASE("heat propagator is exact per mode") {
    TorusGrid g(32);
    ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::sin(2 * x + y); });
    ScalarField ht = heat_propagate(f, 1.0, 0.3);
    const double decay = std::exp(-5.0 * 0.3);
    CHECK(max_abs_diff(ht, decay * f) < 1e-14);
}
