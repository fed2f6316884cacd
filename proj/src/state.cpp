#include "visco2d/state.hpp"

#include <cmath>
#include <string>

#include "visco2d/errors.hpp"
#include "visco2d/rng.hpp"

namespace visco2d {

ConstraintResiduals constraint_residuals(const SimState& s) {
    ConstraintResiduals r;
    const GridSpec& g = s.grid();

    r.div_u_inf = ops::divergence(s.u).linf();

    // Column divergence d_j F_ji for each i.
    for (int i = 0; i < 2; ++i) {
        VectorField col(g);
        col.comp(0) = s.F.comp(0, i);
        col.comp(1) = s.F.comp(1, i);
        r.div_ft_inf = std::max(r.div_ft_inf, ops::divergence(col).linf());
    }

    {
        auto f00 = s.F.comp(0, 0).real();
        auto f01 = s.F.comp(0, 1).real();
        auto f10 = s.F.comp(1, 0).real();
        auto f11 = s.F.comp(1, 1).real();
        double m = 0.0;
        for (size_t p = 0; p < f00.size(); ++p)
            m = std::max(m, std::abs(f00[p] * f11[p] - f01[p] * f10[p] - 1.0));
        r.det_drift_inf = m;
    }

    // Gradient-compatibility: F_lk d_l F_ij is symmetric in (j, k); the only
    // nontrivial residual in 2D is (j, k) = (1, 2) for each row i.
    {
        auto deriv = [&](int i, int j, int axis) {
            VectorField grad = ops::gradient(s.F.comp(i, j));
            return grad.comp(axis);
        };
        double m = 0.0;
        for (int i = 0; i < 2; ++i) {
            ScalarField d0Fi0 = deriv(i, 0, 0);
            ScalarField d1Fi0 = deriv(i, 0, 1);
            ScalarField d0Fi1 = deriv(i, 1, 0);
            ScalarField d1Fi1 = deriv(i, 1, 1);
            auto f00 = s.F.comp(0, 0).real();
            auto f01 = s.F.comp(0, 1).real();
            auto f10 = s.F.comp(1, 0).real();
            auto f11 = s.F.comp(1, 1).real();
            auto a0 = d0Fi1.real();
            auto a1 = d1Fi1.real();
            auto b0 = d0Fi0.real();
            auto b1 = d1Fi0.real();
            for (size_t p = 0; p < f00.size(); ++p) {
                // F_l1 d_l F_i2 - F_l2 d_l F_i1
                const double lhs = f00[p] * a0[p] + f10[p] * a1[p];
                const double rhs = f01[p] * b0[p] + f11[p] * b1[p];
                m = std::max(m, std::abs(lhs - rhs));
            }
        }
        r.compat_inf = m;
    }
    return r;
}

double det_min(const MatrixField& F) {
    auto f00 = F.comp(0, 0).real();
    auto f01 = F.comp(0, 1).real();
    auto f10 = F.comp(1, 0).real();
    auto f11 = F.comp(1, 1).real();
    double m = f00[0] * f11[0] - f01[0] * f10[0];
    for (size_t p = 1; p < f00.size(); ++p)
        m = std::min(m, f00[p] * f11[p] - f01[p] * f10[p]);
    return m;
}

const char* to_string(PreflowKind k) {
    switch (k) {
        case PreflowKind::zero: return "zero";
        case PreflowKind::sinsin: return "sinsin";
        case PreflowKind::random_band: return "random_band";
    }
    return "zero";
}

PreflowKind preflow_kind_from_string(const std::string& s) {
    if (s == "zero") return PreflowKind::zero;
    if (s == "sinsin") return PreflowKind::sinsin;
    if (s == "random_band") return PreflowKind::random_band;
    throw ConfigError("unknown preflow velocity kind: " + s);
}

void InitialDataSpec::validate() const {
    if (amplitude < 0.0) throw ConfigError("init amplitude must be >= 0");
    if (preflow_time < 0.0) throw ConfigError("preflow_time must be >= 0");
    if (preflow_amplitude < 0.0) throw ConfigError("preflow_amplitude must be >= 0");
    if (preflow_dt <= 0.0) throw ConfigError("preflow_dt must be > 0");
    if (kmin < 1 || kmax < kmin) throw ConfigError("need 1 <= kmin <= kmax");
    if (epsilon0_target < 0.0) throw ConfigError("epsilon0_target must be >= 0");
}

namespace {

/// Random stream function on the shell kmin <= |k| <= kmax, assembled as a
/// cosine sum in fixed mode order (deterministic across platforms).
ScalarField random_stream(const GridSpec& g, int kmin, int kmax, Rng& rng) {
    struct Mode {
        double k1, k2, amp, phase;
    };
    std::vector<Mode> modes;
    for (int k1 = 0; k1 <= kmax; ++k1)
        for (int k2 = -kmax; k2 <= kmax; ++k2) {
            if (k1 == 0 && k2 <= 0) continue;  // half-plane; conjugates implicit
            const double kk = std::sqrt(double(k1) * k1 + double(k2) * k2);
            if (kk < kmin - 1e-12 || kk > kmax + 1e-12) continue;
            modes.push_back({double(k1), double(k2), rng.gauss(), kTwoPi * rng.uniform()});
        }
    ScalarField psi(g);
    auto& r = psi.mutable_real();
    const int n = g.n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x1 = g.x1(i);
            const double x2 = g.x2(j);
            double v = 0.0;
            for (const auto& m : modes) v += m.amp * std::cos(m.k1 * x1 + m.k2 * x2 + m.phase);
            r[size_t(g.index(i, j))] = v;
        }
    return psi;
}

VectorField perp_gradient(const ScalarField& psi) {
    VectorField grad = ops::gradient(psi);
    VectorField v(psi.grid());
    v.comp(0) = ops::scaled(-1.0, grad.comp(1));
    v.comp(1) = std::move(grad.comp(0));
    return v;
}

VectorField scaled_to_l2(const VectorField& v, double target_l2) {
    const double norm = std::sqrt(v.l2_sq());
    if (norm == 0.0 || target_l2 == 0.0) return VectorField(v.grid());
    return ops::scaled(target_l2 / norm, v);
}

SimState build_once(const InitialDataSpec& spec, const GridSpec& grid, double scale) {
    SimState s(grid);
    if (spec.preflow_time > 0.0 && spec.preflow_amplitude * scale != 0.0) {
        VectorField w = preflow_velocity_field(spec, grid, scale);
        s.F = preflow_deform(w, spec.preflow_time, spec.preflow_dt);
    }
    if (spec.amplitude * scale > 0.0) {
        Rng rng(spec.seed);
        VectorField raw = perp_gradient(random_stream(grid, spec.kmin, spec.kmax, rng));
        s.u = ops::dealias(scaled_to_l2(raw, spec.amplitude * scale));
    }
    return s;
}

}  // namespace

VectorField preflow_velocity_field(const InitialDataSpec& spec, const GridSpec& grid,
                                   double scale) {
    const double a = spec.preflow_amplitude * scale;
    VectorField w(grid);
    switch (spec.preflow_velocity) {
        case PreflowKind::zero:
            break;
        case PreflowKind::sinsin:
            w.comp(0).fill_from([a](double, double x2) { return a * std::sin(x2); });
            w.comp(1).fill_from([a](double x1, double) { return a * std::sin(x1); });
            break;
        case PreflowKind::random_band: {
            Rng rng(spec.seed * 0x9e3779b97f4a7c15ULL + 0x517cc1b727220a95ULL);
            VectorField raw = perp_gradient(random_stream(grid, spec.kmin, spec.kmax, rng));
            w = scaled_to_l2(raw, a);
            break;
        }
    }
    return ops::dealias(w);
}

MatrixField preflow_deform(const VectorField& w, double time, double dt) {
    const GridSpec& g = w.grid();
    MatrixField F = identity_matrix(g);
    if (time <= 0.0) return F;
    const int steps = std::max(1, int(std::ceil(time / dt - 1e-12)));
    const double h = time / steps;

    // dF/dt = -w.grad F + (grad w) F, classical RK4 with frozen w.
    MatrixField grad_w = ops::vector_gradient(w);
    auto rhs = [&](const MatrixField& f) {
        return ops::lin(-1.0, ops::advection(w, f), 1.0, ops::matmul(grad_w, f));
    };
    for (int s = 0; s < steps; ++s) {
        MatrixField k1 = rhs(F);
        MatrixField k2 = rhs(ops::lin(1.0, F, 0.5 * h, k1));
        MatrixField k3 = rhs(ops::lin(1.0, F, 0.5 * h, k2));
        MatrixField k4 = rhs(ops::lin(1.0, F, h, k3));
        MatrixField incr = ops::lin(1.0, ops::lin(1.0, k1, 2.0, k2), 1.0, ops::lin(2.0, k3, 1.0, k4));
        F = ops::lin(1.0, F, h / 6.0, incr);
    }
    return F;
}

SimState preflow_init(const InitialDataSpec& spec, const GridSpec& grid) {
    spec.validate();
    grid.validate();

    double scale = 1.0;
    SimState s = build_once(spec, grid, scale);
    if (spec.epsilon0_target > 0.0) {
        for (int it = 0; it < 3; ++it) {
            const double measured = epsilon0(s);
            if (measured <= 0.0) break;
            scale *= std::sqrt(spec.epsilon0_target / measured);
            s = build_once(spec, grid, scale);
        }
    }

    const double dist = ops::matrix_minus_identity(s.F).frobenius_linf();
    if (dist > 0.5)
        throw InitRejected("initial deformation too far from identity: ||F0 - I||_inf = " +
                           std::to_string(dist) + " > 1/2");
    return s;
}

double epsilon0(const SimState& s) {
    if (s.t != 0.0) throw PrerequisiteViolated("epsilon0 requires an initial state (t = 0)");
    MatrixField e = ops::matrix_minus_identity(s.F);
    const double linf = e.frobenius_linf();
    return linf * linf + e.l2_sq() + s.u.l2_sq();
}

bool all_finite(const SimState& s) {
    auto finite = [](const ScalarField& f) {
        for (double v : f.real())
            if (!std::isfinite(v)) return false;
        return true;
    };
    for (int i = 0; i < 2; ++i)
        if (!finite(s.u.comp(i))) return false;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (!finite(s.F.comp(i, j))) return false;
    return std::isfinite(s.t) && std::isfinite(s.delta);
}

double SnapshotSeries::spacing() const {
    if (states.size() < 2) throw IncompleteHistory("need at least two snapshots");
    const double d = states[1].t - states[0].t;
    for (size_t i = 1; i + 1 < states.size(); ++i) {
        const double di = states[i + 1].t - states[i].t;
        if (std::abs(di - d) > 1e-9 * std::max(1.0, std::abs(d)))
            throw IncompleteHistory("snapshot spacing is not uniform");
    }
    if (d <= 0.0) throw IncompleteHistory("snapshots not increasing in time");
    return d;
}

}  // namespace visco2d
