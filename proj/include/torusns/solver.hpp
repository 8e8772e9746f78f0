#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "torusns/interp.hpp"
#include "torusns/norms.hpp"
#include "torusns/spectral.hpp"

namespace torusns {

// ---------------------------------------------------------------------
// State and trajectory containers.
// ---------------------------------------------------------------------

struct FlowState {
    double t = 0.0;
    ScalarField rho;
    VectorField u;
    VectorField grad_p;
    double mu = 1.0;
};

struct StepDiagnostics {
    double t = 0.0;
    double energy = 0.0;                  // ||sqrt(rho) u||_{L2}^2
    double dissipation_increment = 0.0;   // trapezoidal mu dt ||grad u||^2
    double rho_min = 0.0, rho_max = 0.0;
    std::array<double, 2> momentum{0.0, 0.0};
};

struct Trajectory {
    std::vector<FlowState> states;
    std::vector<StepDiagnostics> steps;
    double mu = 1.0;

    const TorusGrid& grid() const { return states.front().u.grid(); }
    std::size_t size() const { return states.size(); }
    std::vector<double> times() const {
        std::vector<double> t(states.size());
        for (std::size_t i = 0; i < states.size(); ++i) t[i] = states[i].t;
        return t;
    }
    const FlowState& at_time(double t, double tol = 1e-9) const {
        for (const auto& s : states)
            if (std::abs(s.t - t) <= tol) return s;
        throw MismatchedTimes("trajectory has no snapshot at t = " + std::to_string(t));
    }
};

enum class TimeScheme { IfEuler, Bdf2 };

struct SchemeOptions {
    TimeScheme scheme = TimeScheme::IfEuler;
    double cfl_limit = 0.5;
    bool conserve_momentum = false;
    double nu_bar = 0.0;  // 0: use mu / min(rho)
};

// ---------------------------------------------------------------------
// (rho, v) environments for the linearized systems.
// ---------------------------------------------------------------------

class FlowEnvironment {
  public:
    virtual ~FlowEnvironment() = default;
    virtual const TorusGrid& grid() const = 0;
    virtual double horizon() const = 0;
    virtual double rho_floor() const = 0;
    virtual void sample(double t, std::vector<double>& rho, std::vector<double>& v1,
                        std::vector<double>& v2) const = 0;
};

/// Linear-in-time interpolation of a stored trajectory.
class TrajectoryEnvironment : public FlowEnvironment {
  public:
    explicit TrajectoryEnvironment(const Trajectory& traj) : traj_(&traj) {
        if (traj.states.size() < 2)
            throw InsufficientSnapshots("TrajectoryEnvironment needs at least 2 snapshots");
        floor_ = traj.states.front().rho.min();
        for (const auto& s : traj.states) floor_ = std::min(floor_, s.rho.min());
    }

    const TorusGrid& grid() const override { return traj_->grid(); }
    double horizon() const override { return traj_->states.back().t; }
    double rho_floor() const override { return floor_; }

    void sample(double t, std::vector<double>& rho, std::vector<double>& v1,
                std::vector<double>& v2) const override {
        const auto& st = traj_->states;
        if (t <= st.front().t) return copy_state(st.front(), rho, v1, v2);
        if (t >= st.back().t) return copy_state(st.back(), rho, v1, v2);
        std::size_t hi = 1;
        while (st[hi].t < t) ++hi;
        const auto &a = st[hi - 1], &b = st[hi];
        const double w = (t - a.t) / (b.t - a.t);
        lerp(a.rho.values(), b.rho.values(), w, rho);
        lerp(a.u[0].values(), b.u[0].values(), w, v1);
        lerp(a.u[1].values(), b.u[1].values(), w, v2);
    }

    /// Relative residual of rho_t + div(rho v) = 0 across snapshot gaps,
    /// measured with finite differences in t and spectral divergence.
    double consistency_residual() const {
        const auto& st = traj_->states;
        const TorusGrid& g = traj_->grid();
        double worst = 0.0;
        const std::size_t stride = std::max<std::size_t>(1, (st.size() - 1) / 8);
        for (std::size_t k = 0; k + 1 < st.size(); k += stride) {
            const auto &a = st[k], &b = st[k + 1];
            const double dt = b.t - a.t;
            std::vector<double> rt(g.real_size());
            for (std::size_t i = 0; i < rt.size(); ++i)
                rt[i] = (b.rho.values()[i] - a.rho.values()[i]) / dt;
            ScalarField rho_mid(g, mid(a.rho.values(), b.rho.values()));
            VectorField v_mid(ScalarField(g, mid(a.u[0].values(), b.u[0].values())),
                              ScalarField(g, mid(a.u[1].values(), b.u[1].values())));
            ScalarField divrv = divergence(dealias(multiply(rho_mid, v_mid)));
            ScalarField rtf(g, std::move(rt));
            const double num = lebesgue_norm(rtf + divrv, 2.0);
            const double den = lebesgue_norm(rtf, 2.0) + lebesgue_norm(divrv, 2.0);
            if (den > 1e-14) worst = std::max(worst, num / den);
        }
        return worst;
    }

  private:
    static void copy_state(const FlowState& s, std::vector<double>& rho, std::vector<double>& v1,
                           std::vector<double>& v2) {
        rho = s.rho.values();
        v1 = s.u[0].values();
        v2 = s.u[1].values();
    }
    static void lerp(const std::vector<double>& a, const std::vector<double>& b, double w,
                     std::vector<double>& out) {
        out.resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
    }
    static std::vector<double> mid(const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> m(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
        return m;
    }

    const Trajectory* traj_;
    double floor_ = 0.0;
};

/// Environment given by closed-form (t -> fields) callables; exact pairs
/// (e.g. a steady shear transporting its own density) sidestep any stored
/// trajectory error.
class CallableEnvironment : public FlowEnvironment {
  public:
    using RhoFn = std::function<ScalarField(double)>;
    using VelFn = std::function<VectorField(double)>;

    CallableEnvironment(const TorusGrid& g, RhoFn rho, VelFn v, double rho_floor,
                        double horizon = std::numeric_limits<double>::infinity())
        : grid_(g), rho_(std::move(rho)), v_(std::move(v)), floor_(rho_floor), horizon_(horizon) {}

    const TorusGrid& grid() const override { return grid_; }
    double horizon() const override { return horizon_; }
    double rho_floor() const override { return floor_; }
    void sample(double t, std::vector<double>& rho, std::vector<double>& v1,
                std::vector<double>& v2) const override {
        rho = rho_(t).values();
        VectorField v = v_(t);
        v1 = v[0].values();
        v2 = v[1].values();
    }

  private:
    TorusGrid grid_;
    RhoFn rho_;
    VelFn v_;
    double floor_, horizon_;
};

/// rho = const, v = 0: the linearized system degenerates to the heat flow.
class QuiescentEnvironment : public FlowEnvironment {
  public:
    QuiescentEnvironment(const TorusGrid& g, double rho_const = 1.0) : grid_(g), rho_(rho_const) {}
    const TorusGrid& grid() const override { return grid_; }
    double horizon() const override { return std::numeric_limits<double>::infinity(); }
    double rho_floor() const override { return rho_; }
    void sample(double, std::vector<double>& rho, std::vector<double>& v1,
                std::vector<double>& v2) const override {
        rho.assign(grid_.real_size(), rho_);
        v1.assign(grid_.real_size(), 0.0);
        v2.assign(grid_.real_size(), 0.0);
    }

  private:
    TorusGrid grid_;
    double rho_;
};

using VectorPath = std::function<VectorField(double)>;

// ---------------------------------------------------------------------
// Output-time schedules.
// ---------------------------------------------------------------------

/// Geometric schedule t1, t1*ratio, ... snapped to the step grid; always
/// contains 0 and T.
inline std::vector<double> geometric_output_times(double T, double dt, double t1, double ratio) {
    std::set<long> idx{0, std::lround(T / dt)};
    for (double t = t1; t < T; t *= ratio) {
        const long k = std::lround(t / dt);
        if (k >= 1) idx.insert(std::min(k, std::lround(T / dt)));
    }
    std::vector<double> out;
    for (long k : idx) out.push_back(k * dt);
    return out;
}

inline std::vector<double> uniform_output_times(double T, double dt, double interval) {
    std::set<long> idx{0, std::lround(T / dt)};
    const long stride = std::max(1l, std::lround(interval / dt));
    for (long k = stride; k < std::lround(T / dt); k += stride) idx.insert(k);
    std::vector<double> out;
    for (long k : idx) out.push_back(k * dt);
    return out;
}

// ---------------------------------------------------------------------
// Single-step public operations.
// ---------------------------------------------------------------------

/// Monotone semi-Lagrangian density transport.  Extrema of the output
/// stay inside [min rho, max rho] by the clipping contract.
inline ScalarField step_density(const ScalarField& rho, const VectorField& u, double dt,
                                double cfl_limit = 0.5) {
    const TorusGrid& g = rho.grid();
    const double umax = lebesgue_norm(u, std::numeric_limits<double>::infinity());
    if (dt * umax / g.spacing() > cfl_limit)
        throw CflViolation("step_density: dt max|u| n / L = " +
                           std::to_string(dt * umax / g.spacing()) + " exceeds limit " +
                           std::to_string(cfl_limit));
    return ScalarField(g, semi_lagrangian_advect(g, rho.values(), u[0].values(), u[1].values(), dt));
}

namespace solver_detail {

struct RawVec {
    std::vector<double> a, b;
};

inline std::vector<cplx> to_spec(const TorusGrid& g, const std::vector<double>& v) {
    std::vector<cplx> s(g.spectral_size());
    fft_forward(g, v.data(), s.data());
    return s;
}

inline std::vector<double> to_vals(const TorusGrid& g, const std::vector<cplx>& s) {
    std::vector<double> v(g.real_size());
    fft_backward(g, s.data(), v.data());
    return v;
}

/// ik_j-divergence of the dealiased flux w_j u_i accumulated in spectral
/// space: conv_i = d_j ( w_j * u_i ).
inline void convection_spec(const TorusGrid& g, const std::vector<double>& w1,
                            const std::vector<double>& w2, const std::vector<double>& u1,
                            const std::vector<double>& u2, std::vector<cplx>& c1,
                            std::vector<cplx>& c2) {
    const std::size_t m = g.real_size();
    std::vector<double> prod(m);
    auto flux = [&](const std::vector<double>& w, const std::vector<double>& u) {
        for (std::size_t i = 0; i < m; ++i) prod[i] = w[i] * u[i];
        std::vector<cplx> s = to_spec(g, prod);
        dealias_spec(g, s);
        return s;
    };
    c1.assign(g.spectral_size(), cplx(0.0));
    c2.assign(g.spectral_size(), cplx(0.0));
    const double ku = g.wavenumber_unit();
    auto accum = [&](std::vector<cplx>& dst, const std::vector<cplx>& src, int axis) {
        for_each_mode(g, [&](std::size_t idx, int mx, int my) {
            if (spectral_detail::nyquist(g, mx, my)) return;
            const double k = ku * (axis == 1 ? mx : my);
            dst[idx] += cplx(0.0, k) * src[idx];
        });
    };
    accum(c1, flux(w1, u1), 1);
    accum(c1, flux(w2, u1), 2);
    accum(c2, flux(w1, u2), 1);
    accum(c2, flux(w2, u2), 2);
}

inline double energy(const TorusGrid& g, const std::vector<double>& rho,
                     const std::vector<double>& u1, const std::vector<double>& u2) {
    double e = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) e += rho[i] * (u1[i] * u1[i] + u2[i] * u2[i]);
    return e * g.quadrature_weight();
}

inline std::array<double, 2> momentum(const TorusGrid& g, const std::vector<double>& rho,
                                      const std::vector<double>& u1,
                                      const std::vector<double>& u2) {
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        m1 += rho[i] * u1[i];
        m2 += rho[i] * u2[i];
    }
    const double w = g.quadrature_weight();
    return {m1 * w, m2 * w};
}

/// ||grad u||_{L2}^2 from the spectrum (no transforms).
inline double grad_sq(const TorusGrid& g, const std::vector<cplx>& s1, const std::vector<cplx>& s2) {
    const double ku = g.wavenumber_unit();
    double acc = 0.0;
    for_each_mode(g, [&](std::size_t idx, int mx, int my) {
        const double k2 = ku * ku * (double(mx) * mx + double(my) * my);
        acc += mode_weight(g, mx) * k2 * (std::norm(s1[idx]) + std::norm(s2[idx]));
    });
    return acc * g.length * g.length;
}

// Shared per-step core: density fields are supplied by the caller (either
// SL-advected or sampled from an environment).
struct StepInput {
    const std::vector<double>* rho_n;
    const std::vector<double>* rho_np1;
    const std::vector<double>* v1;  // transport field at t_n
    const std::vector<double>* v2;
    const std::vector<double>* g1 = nullptr;  // optional source at t_n
    const std::vector<double>* g2 = nullptr;
};

class VelocityStepper {
  public:
    VelocityStepper(const TorusGrid& g, const VectorField& u0, double mu, double nu_bar,
                    TimeScheme scheme = TimeScheme::IfEuler)
        : g_(g), mu_(mu), nu_bar_(nu_bar), scheme_(scheme) {
        VectorField u = leray_project(dealias(u0));
        us_[0] = u[0].spectral();
        us_[1] = u[1].spectral();
        uv_[0] = u[0].values();
        uv_[1] = u[1].values();
        gp_[0].assign(g.spectral_size(), cplx(0.0));
        gp_[1].assign(g.spectral_size(), cplx(0.0));
    }

    /// Initialize the pressure gradient from the momentum balance at t=0.
    void init_pressure(const StepInput& in) {
        std::vector<cplx> c1, c2;
        convection_spec(g_, mul(*in.rho_n, *in.v1), mul(*in.rho_n, *in.v2), uv_[0], uv_[1], c1, c2);
        // grad P = Q(-conv + g); the diffusion term is divergence-free.
        for (std::size_t i = 0; i < c1.size(); ++i) {
            c1[i] = -c1[i];
            c2[i] = -c2[i];
        }
        if (in.g1) {
            std::vector<cplx> gs1 = to_spec(g_, *in.g1), gs2 = to_spec(g_, *in.g2);
            for (std::size_t i = 0; i < c1.size(); ++i) {
                c1[i] += gs1[i];
                c2[i] += gs2[i];
            }
        }
        gradient_part_spec(c1, c2);
        gp_[0] = std::move(c1);
        gp_[1] = std::move(c2);
    }

    /// First-order integrating-factor step on the conservative form:
    /// advance rho u explicitly, divide by the new density, apply the
    /// exact diffusion factor exp(nu_bar dt Lap), project.
    void step(const StepInput& in, double dt) {
        if (scheme_ == TimeScheme::Bdf2) return step_ab2(in, dt);

        // explicit fluxes at t_n
        std::vector<cplx> c1, c2;
        convection_spec(g_, mul(*in.rho_n, *in.v1), mul(*in.rho_n, *in.v2), uv_[0], uv_[1], c1, c2);

        // r = rho^n u^n - dt (conv + grad p - g), formed in spectral space
        std::vector<cplx> r1 = to_spec(g_, mul(*in.rho_n, uv_[0]));
        std::vector<cplx> r2 = to_spec(g_, mul(*in.rho_n, uv_[1]));
        std::vector<cplx> gs1, gs2;
        if (in.g1) {
            gs1 = to_spec(g_, *in.g1);
            gs2 = to_spec(g_, *in.g2);
        }
        for (std::size_t i = 0; i < r1.size(); ++i) {
            r1[i] -= dt * (c1[i] + gp_[0][i] - (in.g1 ? gs1[i] : cplx(0.0)));
            r2[i] -= dt * (c2[i] + gp_[1][i] - (in.g2 ? gs2[i] : cplx(0.0)));
        }

        // u~ = r / rho^{n+1}
        std::vector<double> rv1 = to_vals(g_, r1), rv2 = to_vals(g_, r2);
        const auto& rnp1 = *in.rho_np1;
        for (std::size_t i = 0; i < rv1.size(); ++i) {
            rv1[i] /= rnp1[i];
            rv2[i] /= rnp1[i];
        }
        std::vector<cplx> ut1 = to_spec(g_, rv1), ut2 = to_spec(g_, rv2);
        dealias_spec(g_, ut1);
        dealias_spec(g_, ut2);

        // explicit variable-viscosity correction (mu/rho - nu_bar) Lap u^n
        add_viscosity_correction(*in.rho_np1, dt, ut1, ut2);

        diffusion_factor(ut1, ut2, dt);
        finalize(in, dt, std::move(ut1), std::move(ut2));
    }

    /// Second-order variant: integrating-factor Adams-Bashforth on the
    /// convection/viscosity/source terms,
    ///   u^{n+1} = e^{L dt}(u^n + 3/2 dt N^n) - e^{2 L dt}(1/2 dt N^{n-1}).
    /// The pressure gradient stays at the single level n (extrapolating the
    /// projection-lagged pressure feeds a two-cycle instability).
    void step_ab2(const StepInput& in, double dt) {
        std::array<std::vector<cplx>, 2> N = explicit_rhs(in, /*with_pressure=*/false);
        if (!have_hist_) hist_ = N;

        // single-level pressure term -grad P^n / rho^n
        std::vector<double> pp1 = to_vals(g_, gp_[0]), pp2 = to_vals(g_, gp_[1]);
        const auto& rn = *in.rho_n;
        for (std::size_t i = 0; i < pp1.size(); ++i) {
            pp1[i] /= -rn[i];
            pp2[i] /= -rn[i];
        }
        std::vector<cplx> ps1 = to_spec(g_, pp1), ps2 = to_spec(g_, pp2);
        dealias_spec(g_, ps1);
        dealias_spec(g_, ps2);

        std::vector<cplx> ut1(us_[0].size()), ut2(us_[1].size());
        for (std::size_t i = 0; i < ut1.size(); ++i) {
            ut1[i] = us_[0][i] + dt * (1.5 * N[0][i] + ps1[i]);
            ut2[i] = us_[1][i] + dt * (1.5 * N[1][i] + ps2[i]);
        }
        diffusion_factor(ut1, ut2, dt);
        std::vector<cplx> h1 = hist_[0], h2 = hist_[1];
        diffusion_factor(h1, h2, 2.0 * dt);
        for (std::size_t i = 0; i < ut1.size(); ++i) {
            ut1[i] -= 0.5 * dt * h1[i];
            ut2[i] -= 0.5 * dt * h2[i];
        }
        hist_ = std::move(N);
        have_hist_ = true;
        finalize(in, dt, std::move(ut1), std::move(ut2));
    }

    /// Shift the constant mode so the total momentum matches target.
    void enforce_momentum(const std::vector<double>& rho, const std::array<double, 2>& target) {
        const auto cur = momentum(g_, rho, uv_[0], uv_[1]);
        double mass = 0.0;
        for (double r : rho) mass += r;
        mass *= g_.quadrature_weight();
        const double c1 = (target[0] - cur[0]) / mass, c2 = (target[1] - cur[1]) / mass;
        for (std::size_t i = 0; i < uv_[0].size(); ++i) {
            uv_[0][i] += c1;
            uv_[1][i] += c2;
        }
        us_[0][0] += c1;
        us_[1][0] += c2;
    }

    const std::vector<cplx>& spec(int i) const { return us_[i]; }
    const std::vector<double>& vals(int i) const { return uv_[i]; }
    const std::vector<cplx>& grad_p_spec(int i) const { return gp_[i]; }
    double grad_norm_sq() const { return grad_sq(g_, us_[0], us_[1]); }

    VectorField velocity_field() const {
        return VectorField(ScalarField::from_spectral(g_, us_[0]),
                           ScalarField::from_spectral(g_, us_[1]));
    }
    VectorField grad_p_field() const {
        return VectorField(ScalarField::from_spectral(g_, gp_[0]),
                           ScalarField::from_spectral(g_, gp_[1]));
    }

  private:
    /// Explicit right side in velocity form at t_n:
    /// N = -(v.grad)u + ([-grad P] + g)/rho^n + (mu/rho^n - nu_bar) Lap u^n.
    /// Convection is kept in non-conservative form here: the conservative
    /// form divided by rho invokes the mass identity, which the transported
    /// density satisfies only to discretization level.
    std::array<std::vector<cplx>, 2> explicit_rhs(const StepInput& in, bool with_pressure = true) {
        const std::size_t m = g_.real_size();
        // (v.grad)u_i, products dealiased
        std::array<std::vector<double>, 4> du;
        for (int c = 0; c < 2; ++c)
            for (int ax = 1; ax <= 2; ++ax)
                du[2 * c + ax - 1] = to_vals(g_, derivative_spec(g_, us_[c], ax, 1));
        std::array<std::vector<cplx>, 2> N;
        for (int c = 0; c < 2; ++c) {
            std::vector<double> conv(m);
            for (std::size_t i = 0; i < m; ++i)
                conv[i] = -((*in.v1)[i] * du[2 * c][i] + (*in.v2)[i] * du[2 * c + 1][i]);
            N[c] = to_spec(g_, conv);
            dealias_spec(g_, N[c]);
        }

        // (-grad P + g)/rho^n
        std::vector<double> f1(m, 0.0), f2(m, 0.0);
        bool have_f = false;
        if (with_pressure) {
            f1 = to_vals(g_, gp_[0]);
            f2 = to_vals(g_, gp_[1]);
            for (std::size_t i = 0; i < m; ++i) {
                f1[i] = -f1[i];
                f2[i] = -f2[i];
            }
            have_f = true;
        }
        if (in.g1) {
            for (std::size_t i = 0; i < m; ++i) {
                f1[i] += (*in.g1)[i];
                f2[i] += (*in.g2)[i];
            }
            have_f = true;
        }
        if (have_f) {
            const auto& rn = *in.rho_n;
            for (std::size_t i = 0; i < m; ++i) {
                f1[i] /= rn[i];
                f2[i] /= rn[i];
            }
            std::vector<cplx> fs1 = to_spec(g_, f1), fs2 = to_spec(g_, f2);
            dealias_spec(g_, fs1);
            dealias_spec(g_, fs2);
            for (std::size_t i = 0; i < N[0].size(); ++i) {
                N[0][i] += fs1[i];
                N[1][i] += fs2[i];
            }
        }
        add_viscosity_correction(*in.rho_n, 1.0, N[0], N[1]);
        return N;
    }

    /// Projection and incremental pressure update shared by both schemes.
    void finalize(const StepInput& in, double dt, std::vector<cplx> ut1, std::vector<cplx> ut2) {
        std::vector<cplx> p1 = ut1, p2 = ut2;
        leray_project_spec(g_, p1, p2);

        // grad P += Q(rho^{n+1} grad(phi)) / dt with grad(phi) the removed part
        for (std::size_t i = 0; i < p1.size(); ++i) {
            ut1[i] -= p1[i];
            ut2[i] -= p2[i];
        }
        std::vector<double> ph1 = to_vals(g_, ut1), ph2 = to_vals(g_, ut2);
        const auto& rnp1 = *in.rho_np1;
        for (std::size_t i = 0; i < ph1.size(); ++i) {
            ph1[i] *= rnp1[i] / dt;
            ph2[i] *= rnp1[i] / dt;
        }
        std::vector<cplx> dp1 = to_spec(g_, ph1), dp2 = to_spec(g_, ph2);
        dealias_spec(g_, dp1);
        dealias_spec(g_, dp2);
        gradient_part_spec(dp1, dp2);
        for (std::size_t i = 0; i < dp1.size(); ++i) {
            gp_[0][i] += dp1[i];
            gp_[1][i] += dp2[i];
        }

        us_[0] = std::move(p1);
        us_[1] = std::move(p2);
        uv_[0] = to_vals(g_, us_[0]);
        uv_[1] = to_vals(g_, us_[1]);
    }

    void diffusion_factor(std::vector<cplx>& a, std::vector<cplx>& b, double dt) const {
        const double ku = g_.wavenumber_unit();
        for_each_mode(g_, [&](std::size_t idx, int mx, int my) {
            const double k2 = ku * ku * (double(mx) * mx + double(my) * my);
            const double f = std::exp(-nu_bar_ * k2 * dt);
            a[idx] *= f;
            b[idx] *= f;
        });
    }

    void add_viscosity_correction(const std::vector<double>& rho, double dt,
                                  std::vector<cplx>& t1, std::vector<cplx>& t2) {
        const double ku = g_.wavenumber_unit();
        std::vector<cplx> l1(us_[0].size()), l2(us_[1].size());
        for_each_mode(g_, [&](std::size_t idx, int mx, int my) {
            const double k2 = ku * ku * (double(mx) * mx + double(my) * my);
            l1[idx] = -k2 * us_[0][idx];
            l2[idx] = -k2 * us_[1][idx];
        });
        std::vector<double> lv1 = to_vals(g_, l1), lv2 = to_vals(g_, l2);
        for (std::size_t i = 0; i < lv1.size(); ++i) {
            const double c = mu_ / rho[i] - nu_bar_;
            lv1[i] *= c;
            lv2[i] *= c;
        }
        std::vector<cplx> cs1 = to_spec(g_, lv1), cs2 = to_spec(g_, lv2);
        dealias_spec(g_, cs1);
        dealias_spec(g_, cs2);
        for (std::size_t i = 0; i < t1.size(); ++i) {
            t1[i] += dt * cs1[i];
            t2[i] += dt * cs2[i];
        }
    }

    void gradient_part_spec(std::vector<cplx>& a, std::vector<cplx>& b) const {
        for_each_mode(g_, [&](std::size_t idx, int mx, int my) {
            const double k2 = double(mx) * mx + double(my) * my;
            if (k2 == 0.0) {
                a[idx] = b[idx] = 0.0;
                return;
            }
            const cplx kdotu = double(mx) * a[idx] + double(my) * b[idx];
            a[idx] = double(mx) * kdotu / k2;
            b[idx] = double(my) * kdotu / k2;
        });
    }

    std::vector<double> mul(const std::vector<double>& a, const std::vector<double>& b) const {
        std::vector<double> p(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * b[i];
        return p;
    }

    TorusGrid g_;
    double mu_, nu_bar_;
    TimeScheme scheme_;
    std::array<std::vector<cplx>, 2> us_;
    std::array<std::vector<double>, 2> uv_;
    std::array<std::vector<cplx>, 2> gp_;
    std::array<std::vector<cplx>, 2> hist_;  // N^{n-1} for the AB2 variant
    bool have_hist_ = false;
};

}  // namespace solver_detail

// ---------------------------------------------------------------------
// Nonlinear (INS) integration.
// ---------------------------------------------------------------------

struct InsRunParams {
    double T = 1.0;
    double dt = 1e-3;
    double mu = 1.0;
    std::vector<double> output_times;  // snapped to the step grid; 0 and T added
    SchemeOptions scheme;
};

inline Trajectory run_ins(const ScalarField& rho0, const VectorField& u0, const InsRunParams& p) {
    const TorusGrid& g = rho0.grid();
    if (!(g == u0.grid())) throw Error("run_ins: grids differ");
    if (rho0.min() <= 0.0) throw InvalidDensity("run_ins: density must be positive");

    const long nsteps = std::lround(p.T / p.dt);
    const double dt = p.T / nsteps;
    std::set<long> out_idx{0, nsteps};
    for (double t : p.output_times) {
        const long k = std::lround(t / dt);
        if (k >= 0 && k <= nsteps) out_idx.insert(k);
    }

    const double nu_bar =
        p.scheme.nu_bar > 0.0 ? p.scheme.nu_bar : p.mu / rho0.min();
    solver_detail::VelocityStepper vel(g, u0, p.mu, nu_bar, p.scheme.scheme);

    std::vector<double> rho = rho0.values();
    {
        solver_detail::StepInput in0{&rho, &rho, &vel.vals(0), &vel.vals(1)};
        vel.init_pressure(in0);
    }
    const std::array<double, 2> mom0 = solver_detail::momentum(g, rho, vel.vals(0), vel.vals(1));
    std::array<std::vector<double>, 2> uprev{vel.vals(0), vel.vals(1)};

    Trajectory traj;
    traj.mu = p.mu;
    auto emit = [&](double t) {
        traj.states.push_back(
            {t, ScalarField(g, rho), vel.velocity_field(), vel.grad_p_field(), p.mu});
    };
    if (out_idx.count(0)) emit(0.0);

    double grad_sq_prev = vel.grad_norm_sq();
    for (long k = 0; k < nsteps; ++k) {
        const double umax = lp_of_components(g, {&vel.vals(0), &vel.vals(1)},
                                             std::numeric_limits<double>::infinity());
        if (dt * umax / g.spacing() > p.scheme.cfl_limit)
            throw CflViolation("run_ins: CFL " + std::to_string(dt * umax / g.spacing()) +
                               " at t = " + std::to_string(k * dt));

        // AB2 transports the density with midpoint-extrapolated velocity
        std::vector<double> adv1, adv2;
        const std::vector<double>*a1 = &vel.vals(0), *a2 = &vel.vals(1);
        if (p.scheme.scheme == TimeScheme::Bdf2 && k > 0) {
            adv1.resize(g.real_size());
            adv2.resize(g.real_size());
            for (std::size_t i = 0; i < adv1.size(); ++i) {
                adv1[i] = 1.5 * vel.vals(0)[i] - 0.5 * uprev[0][i];
                adv2[i] = 1.5 * vel.vals(1)[i] - 0.5 * uprev[1][i];
            }
            a1 = &adv1;
            a2 = &adv2;
        }
        std::vector<double> rho_next = semi_lagrangian_advect(g, rho, *a1, *a2, dt);

        uprev[0] = vel.vals(0);
        uprev[1] = vel.vals(1);
        solver_detail::StepInput in{&rho, &rho_next, &vel.vals(0), &vel.vals(1)};
        vel.step(in, dt);
        rho = std::move(rho_next);
        if (p.scheme.conserve_momentum) vel.enforce_momentum(rho, mom0);

        StepDiagnostics d;
        d.t = (k + 1) * dt;
        d.energy = solver_detail::energy(g, rho, vel.vals(0), vel.vals(1));
        const double gs = vel.grad_norm_sq();
        d.dissipation_increment = p.mu * dt * 0.5 * (grad_sq_prev + gs);
        grad_sq_prev = gs;
        d.rho_min = *std::min_element(rho.begin(), rho.end());
        d.rho_max = *std::max_element(rho.begin(), rho.end());
        d.momentum = solver_detail::momentum(g, rho, vel.vals(0), vel.vals(1));
        traj.steps.push_back(d);

        if (out_idx.count(k + 1)) emit((k + 1) * dt);
    }
    return traj;
}

/// One full coupled step (density transport + momentum update).
inline FlowState step_momentum(const FlowState& state, double dt,
                               const SchemeOptions& opts = SchemeOptions{}) {
    if (state.rho.min() <= 0.0)
        throw DensityOutOfBounds("step_momentum: density must stay positive");
    InsRunParams p;
    p.T = dt;
    p.dt = dt;
    p.mu = state.mu;
    p.scheme = opts;
    Trajectory t = run_ins(state.rho, state.u, p);
    FlowState out = t.states.back();
    out.t = state.t + dt;
    return out;
}

// ---------------------------------------------------------------------
// Linearized momentum equation in a frozen (rho, v) environment, with
// optional source.
// ---------------------------------------------------------------------

struct LinearizedRunParams {
    double T = 1.0;
    double dt = 1e-3;
    double mu = 1.0;
    std::vector<double> output_times;
    SchemeOptions scheme;
    double consistency_tol = 0.25;  // on TrajectoryEnvironment residual
    bool check_consistency = true;
};

inline Trajectory run_linearized(const FlowEnvironment& env, const VectorField& u0,
                                 const LinearizedRunParams& p, const VectorPath& source = {}) {
    const TorusGrid& g = env.grid();
    if (!(g == u0.grid())) throw Error("run_linearized: grids differ");
    if (p.check_consistency) {
        if (auto* te = dynamic_cast<const TrajectoryEnvironment*>(&env)) {
            const double r = te->consistency_residual();
            if (r > p.consistency_tol)
                throw InconsistentPair("run_linearized: rho_t + div(rho v) residual " +
                                       std::to_string(r) + " exceeds " +
                                       std::to_string(p.consistency_tol));
        }
    }

    const long nsteps = std::lround(p.T / p.dt);
    const double dt = p.T / nsteps;
    std::set<long> out_idx{0, nsteps};
    for (double t : p.output_times) {
        const long k = std::lround(t / dt);
        if (k >= 0 && k <= nsteps) out_idx.insert(k);
    }

    const double nu_bar = p.scheme.nu_bar > 0.0 ? p.scheme.nu_bar : p.mu / env.rho_floor();
    solver_detail::VelocityStepper vel(g, u0, p.mu, nu_bar, p.scheme.scheme);

    std::vector<double> rho_n, v1_n, v2_n, rho_np1, v1_np1, v2_np1;
    env.sample(0.0, rho_n, v1_n, v2_n);

    std::vector<double> g1, g2;
    auto sample_source = [&](double t) -> bool {
        if (!source) return false;
        VectorField s = source(t);
        g1 = s[0].values();
        g2 = s[1].values();
        return true;
    };

    {
        const bool has_g = sample_source(0.0);
        solver_detail::StepInput in{&rho_n, &rho_n, &v1_n, &v2_n, has_g ? &g1 : nullptr,
                                    has_g ? &g2 : nullptr};
        vel.init_pressure(in);
    }

    Trajectory traj;
    traj.mu = p.mu;
    auto emit = [&](double t, const std::vector<double>& rho) {
        traj.states.push_back(
            {t, ScalarField(g, rho), vel.velocity_field(), vel.grad_p_field(), p.mu});
    };
    if (out_idx.count(0)) emit(0.0, rho_n);

    double grad_sq_prev = vel.grad_norm_sq();
    for (long k = 0; k < nsteps; ++k) {
        const double t_n = k * dt;
        const double vmax = lp_of_components(g, {&v1_n, &v2_n},
                                             std::numeric_limits<double>::infinity());
        if (dt * vmax / g.spacing() > p.scheme.cfl_limit)
            throw CflViolation("run_linearized: CFL " + std::to_string(dt * vmax / g.spacing()) +
                               " at t = " + std::to_string(t_n));

        env.sample(t_n + dt, rho_np1, v1_np1, v2_np1);
        const bool has_g = sample_source(t_n);
        solver_detail::StepInput in{&rho_n, &rho_np1, &v1_n, &v2_n, has_g ? &g1 : nullptr,
                                    has_g ? &g2 : nullptr};
        vel.step(in, dt);

        rho_n.swap(rho_np1);
        v1_n.swap(v1_np1);
        v2_n.swap(v2_np1);

        StepDiagnostics d;
        d.t = (k + 1) * dt;
        d.energy = solver_detail::energy(g, rho_n, vel.vals(0), vel.vals(1));
        const double gs = vel.grad_norm_sq();
        d.dissipation_increment = p.mu * dt * 0.5 * (grad_sq_prev + gs);
        grad_sq_prev = gs;
        d.rho_min = *std::min_element(rho_n.begin(), rho_n.end());
        d.rho_max = *std::max_element(rho_n.begin(), rho_n.end());
        d.momentum = solver_detail::momentum(g, rho_n, vel.vals(0), vel.vals(1));
        traj.steps.push_back(d);

        if (out_idx.count(k + 1)) emit((k + 1) * dt, rho_n);
    }
    return traj;
}

// ---------------------------------------------------------------------
// Backward dual system, integrated from t = T down to 0 by reflecting
// time: w~(tau) = w(T - tau) solves the forward linearized system with
// density rho(T - tau), transport -v(T - tau) and source -(rho u)(T - tau).
// ---------------------------------------------------------------------

class ReflectedEnvironment : public FlowEnvironment {
  public:
    ReflectedEnvironment(const FlowEnvironment& base, double T) : base_(&base), T_(T) {}
    const TorusGrid& grid() const override { return base_->grid(); }
    double horizon() const override { return T_; }
    double rho_floor() const override { return base_->rho_floor(); }
    void sample(double t, std::vector<double>& rho, std::vector<double>& v1,
                std::vector<double>& v2) const override {
        base_->sample(T_ - t, rho, v1, v2);
        for (auto& x : v1) x = -x;
        for (auto& x : v2) x = -x;
    }

  private:
    const FlowEnvironment* base_;
    double T_;
};

/// Solve rho w_t + rho v.grad w + Laplace w + grad Q = rho u_src backward
/// from w(T) = wT.  Returned snapshots carry original (forward) times.
inline Trajectory run_backward(const FlowEnvironment& env, const VectorField& wT,
                               const LinearizedRunParams& p, const VectorPath& u_src = {}) {
    ReflectedEnvironment renv(env, p.T);
    VectorPath refl_source;
    if (u_src) {
        const FlowEnvironment* envp = &env;
        const double T = p.T;
        refl_source = [envp, T, u_src](double tau) {
            std::vector<double> rho, v1, v2;
            envp->sample(T - tau, rho, v1, v2);
            VectorField u = u_src(T - tau);
            const TorusGrid& g = u.grid();
            std::vector<double> s1 = u[0].values(), s2 = u[1].values();
            for (std::size_t i = 0; i < s1.size(); ++i) {
                s1[i] *= -rho[i];
                s2[i] *= -rho[i];
            }
            return VectorField(ScalarField(g, std::move(s1)), ScalarField(g, std::move(s2)));
        };
    }
    LinearizedRunParams rp = p;
    rp.output_times.clear();
    for (double t : p.output_times) rp.output_times.push_back(p.T - t);
    Trajectory rev = run_linearized(renv, wT, rp, refl_source);

    Trajectory fwd;
    fwd.mu = rev.mu;
    for (auto it = rev.states.rbegin(); it != rev.states.rend(); ++it) {
        FlowState s = *it;
        s.t = p.T - s.t;
        fwd.states.push_back(std::move(s));
    }
    return fwd;
}

// ---------------------------------------------------------------------
// Free heat flow (exact spectral propagation).
// ---------------------------------------------------------------------

inline Trajectory run_heat(const VectorField& u0, double nu, double T,
                           const std::vector<double>& output_times) {
    const TorusGrid& g = u0.grid();
    std::vector<double> times{0.0};
    for (double t : output_times)
        if (t > 0.0 && t < T) times.push_back(t);
    times.push_back(T);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    Trajectory traj;
    traj.mu = nu;
    ScalarField one = ScalarField::constant(g, 1.0);
    for (double t : times)
        traj.states.push_back({t, one, heat_propagate(u0, nu, t), VectorField::zero(g), nu});
    return traj;
}

// ---------------------------------------------------------------------
// Convective derivative and Stokes-relation pressure reconstruction.
// ---------------------------------------------------------------------

struct ConvectiveSeries {
    std::vector<double> times;            // interior snapshot times
    std::vector<VectorField> u_t;         // nonuniform centered differences
    std::vector<VectorField> u_dot;       // u_t + (v.grad) u
    std::vector<VectorField> grad_p_rec;  // gradient part of mu Lap u - rho u_dot
    std::vector<double> stokes_residual;  // ||P(mu Lap u - rho u_dot)||_{L2}
};

inline ConvectiveSeries convective_derivative(const Trajectory& traj,
                                              const std::vector<VectorField>* v_path = nullptr) {
    if (traj.states.size() < 3)
        throw InsufficientSnapshots("convective_derivative needs at least 3 snapshots");
    ConvectiveSeries out;
    const TorusGrid& g = traj.grid();
    for (std::size_t k = 1; k + 1 < traj.states.size(); ++k) {
        const auto &a = traj.states[k - 1], &b = traj.states[k], &c = traj.states[k + 1];
        const double dm = b.t - a.t, dp = c.t - b.t;
        const double wa = -dp / (dm * (dp + dm)), wb = (dp - dm) / (dp * dm),
                     wc = dm / (dp * (dp + dm));

        auto fd = [&](int comp) {
            std::vector<double> v(g.real_size());
            const auto &va = a.u[comp].values(), &vb = b.u[comp].values(),
                       &vc = c.u[comp].values();
            for (std::size_t i = 0; i < v.size(); ++i)
                v[i] = wa * va[i] + wb * vb[i] + wc * vc[i];
            return ScalarField(g, std::move(v));
        };
        VectorField ut(fd(0), fd(1));

        const VectorField& v = v_path ? (*v_path)[k] : b.u;
        auto conv_comp = [&](int comp) {
            return multiply_dealiased(v[0], derivative(b.u[comp], 1)) +
                   multiply_dealiased(v[1], derivative(b.u[comp], 2));
        };
        VectorField udot = ut + VectorField(conv_comp(0), conv_comp(1));

        VectorField visc = traj.mu * laplacian(b.u);
        VectorField rhs = visc - dealias(multiply(b.rho, udot));
        VectorField gp = gradient_part(rhs);
        out.stokes_residual.push_back(sobolev_norm(rhs - gp, 0.0));

        out.times.push_back(b.t);
        out.u_t.push_back(std::move(ut));
        out.u_dot.push_back(std::move(udot));
        out.grad_p_rec.push_back(std::move(gp));
    }
    return out;
}

// ---------------------------------------------------------------------
// Pure input transformations realizing the scaling symmetries.
// ---------------------------------------------------------------------

/// Dilation: data for the lambda-rescaled problem on the length L/lambda
/// torus.  Grid values transfer unchanged (nodes map onto nodes).
inline std::pair<ScalarField, VectorField> dilate_data(const ScalarField& rho0,
                                                       const VectorField& u0, double lambda) {
    const TorusGrid g(rho0.grid().n, rho0.grid().length / lambda);
    ScalarField rho(g, rho0.values());
    VectorField u(ScalarField(g, u0[0].values()), ScalarField(g, u0[1].values()));
    std::vector<double> v1 = u[0].values(), v2 = u[1].values();
    for (auto& x : v1) x *= lambda;
    for (auto& x : v2) x *= lambda;
    return {rho, VectorField(ScalarField(g, std::move(v1)), ScalarField(g, std::move(v2)))};
}

}  // namespace torusns
