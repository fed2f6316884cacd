#include "visco2d/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "visco2d/errors.hpp"
#include "visco2d/runtime.hpp"

namespace visco2d {

namespace {

/// F F^T - I with the product dealiased per the grid policy.
MatrixField stress_minus_identity(const MatrixField& F) {
    return ops::matrix_minus_identity(ops::matmul_nt(F, F));
}

double rel_norm(double resid, double scale) {
    if (scale < 1e-28) return resid < 1e-28 ? 0.0 : resid / 1e-28;
    return resid / scale;
}

}  // namespace

std::pair<VectorField, VectorField> material_derivative(const SimState& s, double mu) {
    const GridSpec& g = s.grid();
    MatrixField P = stress_minus_identity(s.F);
    VectorField pdiv = ops::leray_project(ops::matrix_divergence(P));
    VectorField pudot(g);
    {
        VectorField lap = ops::laplacian(s.u);
        VectorField bilap = ops::bilaplacian(s.u);
        pudot = ops::lin(1.0, pdiv, mu, lap);
        pudot = ops::lin(1.0, pudot, -s.delta, bilap);
    }
    VectorField udot = ops::lin(1.0, pudot, 1.0, ops::leray_complement(ops::advection(s.u, s.u)));
    return {std::move(pudot), std::move(udot)};
}

FluxFields effective_flux(const SimState& s, double mu) {
    const GridSpec& g = s.grid();
    FluxFields out(g);

    MatrixField P = stress_minus_identity(s.F);
    VectorField pdiv = ops::leray_project(ops::matrix_divergence(P));
    MatrixField grad_pdiv = ops::vector_gradient(pdiv);
    MatrixField grad_u = ops::vector_gradient(s.u);

    out.flux = ops::lin(1.0, grad_u, -1.0, ops::inverse_laplacian(grad_pdiv));
    out.flux_variant = ops::lin(1.0, grad_u, 1.0, ops::matrix_minus_identity(s.F));

    auto md = material_derivative(s, mu);
    out.proj_accel = std::move(md.first);
    out.accel = std::move(md.second);

    // lap G = grad(P udot) + delta grad(lap^2 u) + (1 - mu) grad(lap u);
    // assembled along two independent operator routes, so any wiring bug in
    // the projector/inverse-laplacian chain shows up here.
    {
        MatrixField lhs = ops::laplacian(out.flux);
        MatrixField rhs = ops::vector_gradient(out.proj_accel);
        rhs = ops::lin(1.0, rhs, s.delta, ops::vector_gradient(ops::bilaplacian(s.u)));
        if (mu != 1.0)
            rhs = ops::lin(1.0, rhs, 1.0 - mu, ops::vector_gradient(ops::laplacian(s.u)));
        const double resid = std::sqrt(ops::lin(1.0, lhs, -1.0, rhs).l2_sq());
        out.identity_rel_resid = rel_norm(resid, std::sqrt(rhs.l2_sq()));
    }

    // P div(F - I) = div(F - I) whenever div F^T = 0.
    {
        VectorField d = ops::matrix_divergence(ops::matrix_minus_identity(s.F));
        VectorField q = ops::leray_complement(d);
        out.pdiv_rel_resid = rel_norm(std::sqrt(q.l2_sq()), std::sqrt(d.l2_sq()));
    }
    return out;
}

double flux_decomposition_residual(const SimState& s, double mu) {
    FluxFields ff = effective_flux(s, mu);
    MatrixField E = ops::matrix_minus_identity(s.F);
    MatrixField EEt = ops::matmul_nt(E, E);
    MatrixField rhs = ops::laplacian(ff.flux);
    rhs = ops::lin(1.0, rhs, -1.0,
                   ops::vector_gradient(ops::leray_project(ops::matrix_divergence(EEt))));
    rhs = ops::lin(1.0, rhs, -1.0, ops::curl_curl(E));
    MatrixField lhs = ops::laplacian(ff.flux_variant);
    const double resid = std::sqrt(ops::lin(1.0, lhs, -1.0, rhs).l2_sq());
    return rel_norm(resid, std::sqrt(lhs.l2_sq()));
}

DiagnosticsRecord evaluate_diagnostics(const SimState& s, const RunningStats& stats,
                                       const DiagSettings& settings) {
    DiagnosticsRecord r;
    const GridSpec& g = s.grid();
    r.t = s.t;
    r.sigma = sigma_weight(s.t);

    MatrixField E = ops::matrix_minus_identity(s.F);
    MatrixField grad_u = ops::vector_gradient(s.u);

    r.u_l2_sq = s.u.l2_sq();
    r.f_minus_i_l2_sq = E.l2_sq();
    r.grad_u_l2_sq = grad_u.l2_sq();
    r.delta_lap_u_l2_sq = s.delta * ops::laplacian(s.u).l2_sq();
    r.energy = 0.5 * (r.u_l2_sq + r.f_minus_i_l2_sq);
    r.dissipation_integral = stats.dissipation_integral;
    r.stress_pairing_integral = stats.stress_pairing_integral;
    r.palinstrophy_integral = stats.palinstrophy_integral;
    r.enstrophy = 0.5 * ops::vorticity(s.u).l2_sq();

    r.f_minus_i_linf = E.frobenius_linf();
    r.f_minus_i_linf_sq = r.f_minus_i_linf * r.f_minus_i_linf;
    r.b_running = std::max(stats.b_running, r.f_minus_i_linf_sq);

    {
        ConstraintResiduals cr = constraint_residuals(s);
        r.div_u_inf = cr.div_u_inf;
        r.div_ft_inf = cr.div_ft_inf;
        r.det_drift_inf = cr.det_drift_inf;
        r.compat_inf = cr.compat_inf;
        r.det_min = det_min(s.F);
    }

    // L4 functionals (grid quadrature).
    {
        auto u0 = s.u.comp(0).real();
        auto u1 = s.u.comp(1).real();
        auto g00 = grad_u.comp(0, 0).real();
        auto g01 = grad_u.comp(0, 1).real();
        auto g10 = grad_u.comp(1, 0).real();
        auto g11 = grad_u.comp(1, 1).real();
        double l4 = 0.0, mixed = 0.0;
        for (size_t p = 0; p < u0.size(); ++p) {
            const double usq = u0[p] * u0[p] + u1[p] * u1[p];
            const double gsq =
                g00[p] * g00[p] + g01[p] * g01[p] + g10[p] * g10[p] + g11[p] * g11[p];
            l4 += usq * usq;
            mixed += usq * gsq;
        }
        r.u_l4_4 = l4 * g.cell_area();
        r.u2_gradu2 = mixed * g.cell_area();
    }

    if (settings.full) {
        FluxFields ff = effective_flux(s, settings.mu);
        r.pudot_l2_sq = ff.proj_accel.l2_sq();
        r.udot_l2_sq = ff.accel.l2_sq();
        r.grad_pudot_l2_sq = ops::vector_gradient(ff.proj_accel).l2_sq();
        r.g_l2 = std::sqrt(ff.flux.l2_sq());
        r.grad_g_l2 = std::sqrt(ops::grad_norm_sq(ff.flux));
        r.gf_l2 = std::sqrt(ff.flux_variant.l2_sq());
        r.grad_gf_l2 = std::sqrt(ops::grad_norm_sq(ff.flux_variant));
        r.lap_gf_l2 = std::sqrt(ops::laplacian(ff.flux_variant).l2_sq());
        r.flux_identity_rel = ff.identity_rel_resid;
        r.pdiv_fmi_rel = ff.pdiv_rel_resid;
        r.flux_decomp_rel = flux_decomposition_residual(s, settings.mu);

        r.holder_alpha = settings.holder_alpha;
        r.holder_seminorm = holder_seminorm(s.u, settings.holder_alpha, settings.holder_m);
        const double a = settings.holder_alpha;
        const double eb = stats.epsilon0;
        r.holder_bound = std::pow(eb + r.grad_u_l2_sq, 0.5 * (1.0 - a)) *
                             std::pow(r.pudot_l2_sq, 0.5 * a) +
                         std::pow(eb, 0.5 * (1.0 - a)) * std::pow(r.b_running, 0.5 * a);
    }

    r.sigma_grad_u_l2_sq = r.sigma * r.grad_u_l2_sq;
    r.sigma2_pudot_l2_sq = r.sigma * r.sigma * r.pudot_l2_sq;
    r.sigma_udot_l2_sq = r.sigma * r.udot_l2_sq;
    r.sigma2_grad_pudot_l2_sq = r.sigma * r.sigma * r.grad_pudot_l2_sq;
    r.sup_integrand =
        r.u_l2_sq + r.f_minus_i_l2_sq + r.sigma_grad_u_l2_sq + r.sigma2_pudot_l2_sq;
    return r;
}

const std::vector<std::pair<std::string, double DiagnosticsRecord::*>>& diagnostics_columns() {
    static const auto* cols = new std::vector<std::pair<std::string, double DiagnosticsRecord::*>>{
        {"t", &DiagnosticsRecord::t},
        {"sigma", &DiagnosticsRecord::sigma},
        {"u_l2_sq", &DiagnosticsRecord::u_l2_sq},
        {"f_minus_i_l2_sq", &DiagnosticsRecord::f_minus_i_l2_sq},
        {"grad_u_l2_sq", &DiagnosticsRecord::grad_u_l2_sq},
        {"delta_lap_u_l2_sq", &DiagnosticsRecord::delta_lap_u_l2_sq},
        {"energy", &DiagnosticsRecord::energy},
        {"dissipation_integral", &DiagnosticsRecord::dissipation_integral},
        {"stress_pairing_integral", &DiagnosticsRecord::stress_pairing_integral},
        {"enstrophy", &DiagnosticsRecord::enstrophy},
        {"palinstrophy_integral", &DiagnosticsRecord::palinstrophy_integral},
        {"sigma_grad_u_l2_sq", &DiagnosticsRecord::sigma_grad_u_l2_sq},
        {"sigma2_pudot_l2_sq", &DiagnosticsRecord::sigma2_pudot_l2_sq},
        {"sigma_udot_l2_sq", &DiagnosticsRecord::sigma_udot_l2_sq},
        {"sigma2_grad_pudot_l2_sq", &DiagnosticsRecord::sigma2_grad_pudot_l2_sq},
        {"pudot_l2_sq", &DiagnosticsRecord::pudot_l2_sq},
        {"udot_l2_sq", &DiagnosticsRecord::udot_l2_sq},
        {"grad_pudot_l2_sq", &DiagnosticsRecord::grad_pudot_l2_sq},
        {"sup_integrand", &DiagnosticsRecord::sup_integrand},
        {"f_minus_i_linf", &DiagnosticsRecord::f_minus_i_linf},
        {"f_minus_i_linf_sq", &DiagnosticsRecord::f_minus_i_linf_sq},
        {"b_running", &DiagnosticsRecord::b_running},
        {"div_u_inf", &DiagnosticsRecord::div_u_inf},
        {"div_ft_inf", &DiagnosticsRecord::div_ft_inf},
        {"det_drift_inf", &DiagnosticsRecord::det_drift_inf},
        {"compat_inf", &DiagnosticsRecord::compat_inf},
        {"det_min", &DiagnosticsRecord::det_min},
        {"u_l4_4", &DiagnosticsRecord::u_l4_4},
        {"u2_gradu2", &DiagnosticsRecord::u2_gradu2},
        {"holder_alpha", &DiagnosticsRecord::holder_alpha},
        {"holder_seminorm", &DiagnosticsRecord::holder_seminorm},
        {"holder_bound", &DiagnosticsRecord::holder_bound},
        {"g_l2", &DiagnosticsRecord::g_l2},
        {"grad_g_l2", &DiagnosticsRecord::grad_g_l2},
        {"gf_l2", &DiagnosticsRecord::gf_l2},
        {"grad_gf_l2", &DiagnosticsRecord::grad_gf_l2},
        {"lap_gf_l2", &DiagnosticsRecord::lap_gf_l2},
        {"flux_identity_rel", &DiagnosticsRecord::flux_identity_rel},
        {"flux_decomp_rel", &DiagnosticsRecord::flux_decomp_rel},
        {"pdiv_fmi_rel", &DiagnosticsRecord::pdiv_fmi_rel},
    };
    return *cols;
}

namespace {

void require_uniform_coverage(const std::vector<DiagnosticsRecord>& h, double T) {
    if (h.empty()) throw IncompleteHistory("empty history");
    if (h.front().t > 1e-12) throw IncompleteHistory("history does not start at t = 0");
    if (h.back().t < T - 1e-9) throw IncompleteHistory("history ends before T");
    if (h.size() >= 3) {
        const double d = h[1].t - h[0].t;
        for (size_t i = 0; i + 1 < h.size(); ++i)
            if (std::abs(h[i + 1].t - h[i].t - d) > 1e-9 * std::max(1.0, d))
                throw IncompleteHistory("gap in history at t = " + std::to_string(h[i].t));
    }
}

/// Trapezoid on the sigma-weighted A integrand with exact handling of the
/// sigma kink: the unweighted factors are interpolated linearly onto the
/// kink/endpoint, then re-weighted.
double a_integral(const std::vector<DiagnosticsRecord>& h, double T) {
    auto unweighted = [](const DiagnosticsRecord& r, double* gu, double* ud, double* gpd) {
        *gu = r.grad_u_l2_sq;
        *ud = r.udot_l2_sq;
        *gpd = r.grad_pudot_l2_sq;
    };
    auto weighted_value = [](double t, double gu, double ud, double gpd) {
        const double s = sigma_weight(t);
        return gu + s * ud + s * s * gpd;
    };

    double acc = 0.0;
    for (size_t i = 0; i + 1 < h.size(); ++i) {
        double t0 = h[i].t, t1 = h[i + 1].t;
        if (t0 >= T - 1e-15) break;
        double g0, d0, p0, g1, d1, p1;
        unweighted(h[i], &g0, &d0, &p0);
        unweighted(h[i + 1], &g1, &d1, &p1);

        auto lerp = [&](double t, double a, double b) {
            const double w = (t - t0) / (t1 - t0);
            return a + w * (b - a);
        };
        // collect breakpoints: interval clipped to [0, T], split at sigma kink
        std::vector<double> ts{t0, std::min(t1, T)};
        if (t0 < 1.0 && std::min(t1, T) > 1.0) ts.insert(ts.begin() + 1, 1.0);
        for (size_t k = 0; k + 1 < ts.size(); ++k) {
            const double ta = ts[k], tb = ts[k + 1];
            const double fa =
                weighted_value(ta, lerp(ta, g0, g1), lerp(ta, d0, d1), lerp(ta, p0, p1));
            const double fb =
                weighted_value(tb, lerp(tb, g0, g1), lerp(tb, d0, d1), lerp(tb, p0, p1));
            acc += 0.5 * (fa + fb) * (tb - ta);
        }
    }
    return acc;
}

}  // namespace

FunctionalA functional_A(const std::vector<DiagnosticsRecord>& history, double T) {
    require_uniform_coverage(history, T);
    FunctionalA out;
    for (const auto& r : history)
        if (r.t <= T + 1e-12) out.sup_part = std::max(out.sup_part, r.sup_integrand);
    out.integral_part = a_integral(history, T);
    out.value = out.sup_part + out.integral_part;
    return out;
}

double functional_B(const std::vector<DiagnosticsRecord>& history, double T) {
    require_uniform_coverage(history, T);
    double b = 0.0;
    for (const auto& r : history)
        if (r.t <= T + 1e-12) b = std::max(b, r.f_minus_i_linf_sq);
    return b;
}

FluxBoundReport flux_h1_bound_check(const SimState& s, double mu) {
    FluxBoundReport rep;
    FluxFields ff = effective_flux(s, mu);
    MatrixField E = ops::matrix_minus_identity(s.F);
    MatrixField EEt = ops::matmul_nt(E, E);

    rep.lhs_sq = ops::laplacian(ff.flux_variant).l2_sq() + ops::curl_curl(E).l2_sq() +
                 ops::vector_gradient(ops::leray_project(ops::matrix_divergence(EEt))).l2_sq();
    rep.rhs_sq = ops::vector_gradient(ff.proj_accel).l2_sq();
    rep.grad_variant_sq = ops::grad_norm_sq(ff.flux_variant);
    rep.pudot_sq = ff.proj_accel.l2_sq();
    rep.delta_correction_rel =
        rel_norm(s.delta * std::sqrt(ops::vector_gradient(ops::bilaplacian(s.u)).l2_sq()),
                 std::sqrt(rep.rhs_sq));
    if (rep.rhs_sq < 1e-28 && rep.lhs_sq < 1e-28) {
        rep.both_zero = true;
        return rep;
    }
    rep.ratio = rep.lhs_sq / std::max(rep.rhs_sq, 1e-300);
    rep.ratio_dimensional = rep.grad_variant_sq / std::max(rep.pudot_sq, 1e-300);
    rep.ratio_as_written = std::sqrt(rep.grad_variant_sq) / std::max(rep.pudot_sq, 1e-300);
    return rep;
}

L4Report l4_energy_check(const std::vector<DiagnosticsRecord>& history, double T,
                         double epsilon0) {
    require_uniform_coverage(history, T);
    L4Report rep;
    for (const auto& r : history)
        if (r.t <= T + 1e-12) rep.sup_u_l4_4 = std::max(rep.sup_u_l4_4, r.u_l4_4);
    double acc = 0.0;
    for (size_t i = 0; i + 1 < history.size(); ++i) {
        if (history[i].t >= T - 1e-15) break;
        const double tb = std::min(history[i + 1].t, T);
        acc += 0.5 * (history[i].u2_gradu2 + history[i + 1].u2_gradu2) * (tb - history[i].t);
    }
    rep.mixed_integral = acc;
    rep.lhs = rep.sup_u_l4_4 + rep.mixed_integral;
    rep.rhs_u0_l4_4 = history.front().u_l4_4;
    rep.rhs_eps0_b = epsilon0 * functional_B(history, T);
    rep.ratio = rep.lhs / std::max(rep.rhs_u0_l4_4 + rep.rhs_eps0_b, 1e-300);
    return rep;
}

double holder_seminorm(const VectorField& u, double alpha, int m) {
    if (!(alpha > 0.1 && alpha < 0.9))
        throw ConfigError("holder alpha must lie in (0.1, 0.9)");
    const GridSpec& g = u.grid();
    const int stride = std::max(1, g.n / m);
    const int mm = g.n / stride;

    std::vector<double> s0(static_cast<size_t>(mm) * mm), s1(s0.size());
    auto r0 = u.comp(0).real();
    auto r1 = u.comp(1).real();
    for (int i = 0; i < mm; ++i)
        for (int j = 0; j < mm; ++j) {
            const size_t src = static_cast<size_t>(g.index(i * stride, j * stride));
            s0[static_cast<size_t>(i) * mm + j] = r0[src];
            s1[static_cast<size_t>(i) * mm + j] = r1[src];
        }

    // One candidate per lattice offset (the pair set is translation
    // structured, so the distance weight is hoisted out of the inner max).
    // Offset rows are scanned in parallel; max-reduction is order
    // independent, so any worker count gives identical bits.
    const double h = kTwoPi / mm;
    auto scan_rows = [&](int oi_begin, int oi_end) {
        double best = 0.0;
        for (int oi = oi_begin; oi < oi_end; ++oi) {
            const double dx = std::min(oi, mm - oi) * h;
            for (int oj = 0; oj < mm; ++oj) {
                if (oi == 0 && oj == 0) continue;
                const double dy = std::min(oj, mm - oj) * h;
                const double dist = std::sqrt(dx * dx + dy * dy);
                if (dist > kTwoPi / 2.0 + 1e-12) continue;
                double maxdiff_sq = 0.0;
                for (int i = 0; i < mm; ++i) {
                    const int ii = (i + oi) % mm;
                    const size_t row = static_cast<size_t>(i) * mm;
                    const size_t row2 = static_cast<size_t>(ii) * mm;
                    for (int j = 0; j < mm; ++j) {
                        const int jj = (j + oj) % mm;
                        const double d0 = s0[row2 + jj] - s0[row + j];
                        const double d1 = s1[row2 + jj] - s1[row + j];
                        const double d = d0 * d0 + d1 * d1;
                        if (d > maxdiff_sq) maxdiff_sq = d;
                    }
                }
                const double cand = std::sqrt(maxdiff_sq) / std::pow(dist, alpha);
                if (cand > best) best = cand;
            }
        }
        return best;
    };

    const int workers = std::min(thread_hint(), mm);
    if (workers <= 1) return scan_rows(0, mm);
    std::vector<double> partial(static_cast<size_t>(workers), 0.0);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        const int begin = mm * w / workers;
        const int end = mm * (w + 1) / workers;
        pool.emplace_back([&partial, &scan_rows, w, begin, end] {
            partial[static_cast<size_t>(w)] = scan_rows(begin, end);
        });
    }
    for (auto& t : pool) t.join();
    double best = 0.0;
    for (double p : partial) best = std::max(best, p);
    return best;
}

HolderReport holder_bound_check(const SimState& s, double alpha, double epsilon0,
                                double b_running, double mu, int m) {
    HolderReport rep;
    rep.alpha = alpha;
    rep.seminorm = holder_seminorm(s.u, alpha, m);
    auto md = material_derivative(s, mu);
    const double pudot_sq = md.first.l2_sq();
    const double gradu_sq = ops::vector_gradient(s.u).l2_sq();
    rep.bound = std::pow(epsilon0 + gradu_sq, 0.5 * (1.0 - alpha)) * std::pow(pudot_sq, 0.5 * alpha) +
                std::pow(epsilon0, 0.5 * (1.0 - alpha)) * std::pow(b_running, 0.5 * alpha);
    rep.ratio = rep.seminorm / std::max(rep.bound, 1e-300);
    return rep;
}

// --- weak formulations -------------------------------------------------------

namespace {

struct Bump {
    double a, b;
    double operator()(double t) const {
        if (t <= a || t >= b) return 0.0;
        const double s = (t - a) / (b - a);
        return std::exp(-1.0 / (s * (1.0 - s)));
    }
    double dt(double t) const {
        if (t <= a || t >= b) return 0.0;
        const double w = b - a;
        const double s = (t - a) / w;
        const double q = s * (1.0 - s);
        return operator()(t) * (1.0 - 2.0 * s) / (q * q) / w;
    }
};

}  // namespace

TestFunction solenoidal_test_function(int k1, int k2, double phase, double T,
                                      const std::string& name) {
    Bump bump{0.1 * T, 0.9 * T};
    const double a1 = k1, a2 = k2;
    TestFunction f;
    f.name = name;
    f.solenoidal = true;
    f.comp = [a1, a2, phase](int i, double x1, double x2) {
        const double s = std::sin(a1 * x1 + a2 * x2 + phase);
        return i == 0 ? a2 * s : -a1 * s;
    };
    f.grad = [a1, a2, phase](int i, int j, double x1, double x2) {
        const double c = std::cos(a1 * x1 + a2 * x2 + phase);
        const double ki = (i == 0 ? a2 : -a1);
        const double kj = (j == 0 ? a1 : a2);
        return ki * kj * c;
    };
    f.lap = [a1, a2, phase](int i, double x1, double x2) {
        const double s = std::sin(a1 * x1 + a2 * x2 + phase);
        return -(a1 * a1 + a2 * a2) * (i == 0 ? a2 * s : -a1 * s);
    };
    f.bump = [bump](double t) { return bump(t); };
    f.bump_dt = [bump](double t) { return bump.dt(t); };
    return f;
}

TestFunction generic_test_function(int k1, int k2, double phase, double T,
                                   const std::string& name) {
    Bump bump{0.1 * T, 0.9 * T};
    const double a1 = k1, a2 = k2;
    TestFunction f;
    f.name = name;
    f.solenoidal = false;
    f.comp = [a1, a2, phase](int i, double x1, double x2) {
        return i == 0 ? std::cos(a1 * x1 + a2 * x2 + phase)
                      : std::sin(a1 * x1 - a2 * x2 + phase);
    };
    f.grad = [a1, a2, phase](int i, int j, double x1, double x2) {
        if (i == 0) {
            const double s = -std::sin(a1 * x1 + a2 * x2 + phase);
            return (j == 0 ? a1 : a2) * s;
        }
        const double c = std::cos(a1 * x1 - a2 * x2 + phase);
        return (j == 0 ? a1 : -a2) * c;
    };
    f.lap = [a1, a2, phase, f](int i, double x1, double x2) {
        return -(a1 * a1 + a2 * a2) * f.comp(i, x1, x2);
    };
    f.bump = [bump](double t) { return bump(t); };
    f.bump_dt = [bump](double t) { return bump.dt(t); };
    return f;
}

namespace {

/// Composite Simpson over uniformly spaced samples (trapezoid on a trailing
/// odd interval; the temporal bump has died off there by construction).
double integrate_series(const std::vector<double>& f, double h) {
    double acc = 0.0;
    size_t k = 0;
    for (; k + 2 < f.size(); k += 2) acc += h / 3.0 * (f[k] + 4.0 * f[k + 1] + f[k + 2]);
    if (k + 1 < f.size()) acc += 0.5 * h * (f[k] + f[k + 1]);
    return acc;
}

/// Sample a test function's space profile (and derived grids) once.
struct SampledTestFunction {
    std::vector<double> comp[2], grad[2][2], lap[2];

    SampledTestFunction(const TestFunction& f, const GridSpec& g) {
        const size_t total = static_cast<size_t>(g.size());
        for (int i = 0; i < 2; ++i) {
            comp[i].resize(total);
            lap[i].resize(total);
            for (int j = 0; j < 2; ++j) grad[i][j].resize(total);
        }
        for (int a = 0; a < g.n; ++a)
            for (int b = 0; b < g.n; ++b) {
                const size_t idx = static_cast<size_t>(g.index(a, b));
                const double x1 = g.x1(a), x2 = g.x2(b);
                for (int i = 0; i < 2; ++i) {
                    comp[i][idx] = f.comp(i, x1, x2);
                    lap[i][idx] = f.lap(i, x1, x2);
                    for (int j = 0; j < 2; ++j) grad[i][j][idx] = f.grad(i, j, x1, x2);
                }
            }
    }
};

void check_solenoidal(const TestFunction& f, const SampledTestFunction& sf, const GridSpec& g) {
    if (!f.solenoidal)
        throw InvalidTestFunction("momentum weak form requires a divergence-free test function");
    VectorField v(g);
    v.comp(0).mutable_real() = sf.comp[0];
    v.comp(1).mutable_real() = sf.comp[1];
    const double div = ops::divergence(v).linf();
    const double scale = std::max(1.0, v.linf());
    if (div > 1e-10 * scale)
        throw InvalidTestFunction("test function divergence residual " + std::to_string(div));
}

}  // namespace

double weak_form_momentum_residual(const SnapshotSeries& run, const TestFunction& psi,
                                   double mu) {
    const GridSpec& g = run.states.front().grid();
    const double dt = run.spacing();
    SampledTestFunction sf(psi, g);
    check_solenoidal(psi, sf, g);
    const double cell = g.cell_area();

    // data term (bump vanishes at t0 by construction; kept for generality)
    double total = 0.0;
    {
        const SimState& s0 = run.states.front();
        auto u0 = s0.u.comp(0).real();
        auto u1 = s0.u.comp(1).real();
        double acc = 0.0;
        for (size_t p = 0; p < u0.size(); ++p)
            acc += u0[p] * sf.comp[0][p] + u1[p] * sf.comp[1][p];
        total += acc * cell * psi.bump(s0.t);
    }

    std::vector<double> integrand(run.states.size());
    for (size_t k = 0; k < run.states.size(); ++k) {
        const SimState& s = run.states[k];
        const double eta = psi.bump(s.t);
        const double eta_dt = psi.bump_dt(s.t);
        if (eta == 0.0 && eta_dt == 0.0) {
            integrand[k] = 0.0;
            continue;
        }
        auto u0 = s.u.comp(0).real();
        auto u1 = s.u.comp(1).real();
        MatrixField grad_u = ops::vector_gradient(s.u);
        VectorField lap_u = ops::laplacian(s.u);
        auto g00 = grad_u.comp(0, 0).real();
        auto g01 = grad_u.comp(0, 1).real();
        auto g10 = grad_u.comp(1, 0).real();
        auto g11 = grad_u.comp(1, 1).real();
        auto l0 = lap_u.comp(0).real();
        auto l1 = lap_u.comp(1).real();
        auto f00 = s.F.comp(0, 0).real();
        auto f01 = s.F.comp(0, 1).real();
        auto f10 = s.F.comp(1, 0).real();
        auto f11 = s.F.comp(1, 1).real();

        double time_term = 0.0, stress_term = 0.0, visc_term = 0.0, bih_term = 0.0;
        for (size_t p = 0; p < u0.size(); ++p) {
            time_term += u0[p] * sf.comp[0][p] + u1[p] * sf.comp[1][p];
            // (u x u - F F^T) : grad psi
            const double t00 = u0[p] * u0[p] - (f00[p] * f00[p] + f01[p] * f01[p]);
            const double t01 = u0[p] * u1[p] - (f00[p] * f10[p] + f01[p] * f11[p]);
            const double t11 = u1[p] * u1[p] - (f10[p] * f10[p] + f11[p] * f11[p]);
            stress_term += t00 * sf.grad[0][0][p] + t01 * (sf.grad[0][1][p] + sf.grad[1][0][p]) +
                           t11 * sf.grad[1][1][p];
            visc_term += g00[p] * sf.grad[0][0][p] + g01[p] * sf.grad[0][1][p] +
                         g10[p] * sf.grad[1][0][p] + g11[p] * sf.grad[1][1][p];
            bih_term += l0[p] * sf.lap[0][p] + l1[p] * sf.lap[1][p];
        }
        integrand[k] = cell * (time_term * eta_dt + stress_term * eta - mu * visc_term * eta -
                               s.delta * bih_term * eta);
    }
    total += integrate_series(integrand, dt);
    return std::abs(total);
}

double weak_form_transport_residual(const SnapshotSeries& run, int column_j,
                                    const TestFunction& beta) {
    const GridSpec& g = run.states.front().grid();
    const double dt = run.spacing();
    SampledTestFunction sf(beta, g);
    const double cell = g.cell_area();

    auto column = [column_j](const SimState& s, int row) {
        return s.F.comp(row, column_j).real();
    };

    double total = 0.0;
    {
        const SimState& s0 = run.states.front();
        auto c0 = column(s0, 0);
        auto c1 = column(s0, 1);
        double acc = 0.0;
        for (size_t p = 0; p < c0.size(); ++p)
            acc += c0[p] * sf.comp[0][p] + c1[p] * sf.comp[1][p];
        total += acc * cell * beta.bump(s0.t);
    }

    std::vector<double> integrand(run.states.size());
    for (size_t k = 0; k < run.states.size(); ++k) {
        const SimState& s = run.states[k];
        const double eta = beta.bump(s.t);
        const double eta_dt = beta.bump_dt(s.t);
        if (eta == 0.0 && eta_dt == 0.0) {
            integrand[k] = 0.0;
            continue;
        }
        auto c0 = column(s, 0);
        auto c1 = column(s, 1);
        auto u0 = s.u.comp(0).real();
        auto u1 = s.u.comp(1).real();
        double time_term = 0.0, flux_term = 0.0;
        for (size_t p = 0; p < c0.size(); ++p) {
            time_term += c0[p] * sf.comp[0][p] + c1[p] * sf.comp[1][p];
            // (F_j x u - u x F_j) : grad beta, (a x b)_il = a_i b_l
            const double fx[2] = {c0[p], c1[p]};
            const double ux[2] = {u0[p], u1[p]};
            for (int i = 0; i < 2; ++i)
                for (int l = 0; l < 2; ++l)
                    flux_term += (fx[i] * ux[l] - ux[i] * fx[l]) * sf.grad[i][l][p];
        }
        integrand[k] = cell * (time_term * eta_dt + flux_term * eta);
    }
    total += integrate_series(integrand, dt);
    return std::abs(total);
}

double ss_transport_identity_residual(const SnapshotSeries& run) {
    const double dt = run.spacing();
    double worst = 0.0;
    for (size_t k = 1; k + 1 < run.states.size(); ++k) {
        const SimState& s = run.states[k];
        MatrixField T = ops::matmul_nt(s.F, s.F);
        MatrixField Tm = ops::matmul_nt(run.states[k - 1].F, run.states[k - 1].F);
        MatrixField Tp = ops::matmul_nt(run.states[k + 1].F, run.states[k + 1].F);
        MatrixField ddt = ops::lin(1.0 / (2.0 * dt), Tp, -1.0 / (2.0 * dt), Tm);
        MatrixField grad_u = ops::vector_gradient(s.u);
        MatrixField resid = ops::lin(1.0, ddt, 1.0, ops::advection(s.u, T));
        resid = ops::lin(1.0, resid, -1.0, ops::matmul(grad_u, T));
        resid = ops::lin(1.0, resid, -1.0, ops::matmul_nt(T, grad_u));
        worst = std::max(worst, std::sqrt(resid.l2_sq()));
    }
    return worst;
}

}  // namespace visco2d
