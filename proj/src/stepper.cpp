#include "visco2d/stepper.hpp"

#include <cmath>
#include <memory>

#include "visco2d/errors.hpp"
#include "visco2d/fft.hpp"

namespace visco2d {

const char* to_string(Scheme s) { return s == Scheme::if_rk2 ? "if_rk2" : "if_rk4"; }

Scheme scheme_from_string(const std::string& s) {
    if (s == "if_rk2") return Scheme::if_rk2;
    if (s == "if_rk4") return Scheme::if_rk4;
    throw ConfigError("unknown scheme: " + s);
}

void StepperConfig::validate() const {
    if (dt <= 0.0) throw ConfigError("dt must be > 0");
    if (mu <= 0.0) throw ConfigError("mu must be > 0");
    if (cfl_c <= 0.0) throw ConfigError("cfl constant must be > 0");
}

namespace {
struct StageAux {
    double stress_pairing = 0.0;
    double max_u = 0.0;
};
}  // namespace

struct Stepper::Impl {
    GridSpec grid;
    StepperConfig cfg;
    double delta = 0.0;
    double t = 0.0;
    WorkIntegrals work;

    const FftEngine* fft = nullptr;
    size_t total = 0;
    double spectral_norm_scale = 0.0;  // box_area / n^4, Parseval weight

    // per-mode tables
    std::vector<double> k1, k2, ksq, e_half, e_full;
    std::vector<unsigned char> keep;

    // state (spectral)
    std::vector<cplx> u[2], F[4];

    // stage machinery
    std::vector<cplx> su[2], sF[4];          // stage state
    std::vector<cplx> ka_u[4][2], ka_F[4][4];  // stage slopes
    std::vector<cplx> scratch;

    // real-space work buffers
    std::vector<double> r_u[2], r_gu[2][2], r_F[4], r_dF[4][2], r_prod[4];
    std::vector<cplx> h_convU[2], h_convF[4], h_guF[4], h_P[3];

    Impl(const SimState& s0, const StepperConfig& c) : grid(s0.grid()), cfg(c) {
        grid.validate();
        cfg.validate();
        delta = s0.delta;
        if (delta < 0.0) throw ConfigError("delta must be >= 0");
        t = s0.t;
        fft = &FftEngine::get(grid.n);
        total = static_cast<size_t>(grid.size());
        const double n2 = static_cast<double>(grid.n) * grid.n;
        spectral_norm_scale = GridSpec::box_area() / (n2 * n2);

        k1.resize(total);
        k2.resize(total);
        ksq.resize(total);
        e_half.resize(total);
        e_full.resize(total);
        keep.resize(total);
        const int n = grid.n;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const size_t idx = static_cast<size_t>(grid.index(a, b));
                k1[idx] = grid.wavenumber(a);
                k2[idx] = grid.wavenumber(b);
                ksq[idx] = k1[idx] * k1[idx] + k2[idx] * k2[idx];
                keep[idx] = grid.retained(a, b) ? 1 : 0;
                const double lin = -cfg.mu * ksq[idx] - delta * ksq[idx] * ksq[idx];
                e_half[idx] = std::exp(0.5 * cfg.dt * lin);
                e_full[idx] = std::exp(cfg.dt * lin);
            }

        auto alloc_c = [&](std::vector<cplx>& v) { v.assign(total, cplx(0.0, 0.0)); };
        auto alloc_r = [&](std::vector<double>& v) { v.assign(total, 0.0); };
        for (int i = 0; i < 2; ++i) {
            alloc_c(u[i]);
            alloc_c(su[i]);
            alloc_c(h_convU[i]);
            alloc_r(r_u[i]);
            for (int j = 0; j < 2; ++j) alloc_r(r_gu[i][j]);
        }
        for (int i = 0; i < 4; ++i) {
            alloc_c(F[i]);
            alloc_c(sF[i]);
            alloc_c(h_convF[i]);
            alloc_c(h_guF[i]);
            alloc_r(r_F[i]);
            alloc_r(r_prod[i]);
            for (int l = 0; l < 2; ++l) alloc_r(r_dF[i][l]);
        }
        for (int i = 0; i < 3; ++i) alloc_c(h_P[i]);
        for (int s = 0; s < 4; ++s) {
            for (int i = 0; i < 2; ++i) alloc_c(ka_u[s][i]);
            for (int i = 0; i < 4; ++i) alloc_c(ka_F[s][i]);
        }
        alloc_c(scratch);

        load(s0);
    }

    void load(const SimState& s) {
        for (int i = 0; i < 2; ++i) from_real(s.u.comp(i).real(), u[i]);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) from_real(s.F.comp(i, j).real(), F[2 * i + j]);
        t = s.t;
    }

    void from_real(std::span<const double> r, std::vector<cplx>& out) {
        for (size_t i = 0; i < total; ++i) out[i] = cplx(r[i], 0.0);
        fft->forward(out.data());
        for (size_t i = 0; i < total; ++i)
            if (!keep[i]) out[i] = cplx(0.0, 0.0);
    }

    void to_real(const std::vector<cplx>& spec, std::vector<double>& out) {
        std::copy(spec.begin(), spec.end(), scratch.begin());
        fft->inverse(scratch.data());
        for (size_t i = 0; i < total; ++i) out[i] = scratch[i].real();
    }

    void deriv_to_real(const std::vector<cplx>& spec, int axis, std::vector<double>& out) {
        const std::vector<double>& k = axis == 0 ? k1 : k2;
        for (size_t i = 0; i < total; ++i)
            scratch[i] = cplx(-k[i] * spec[i].imag(), k[i] * spec[i].real());
        fft->inverse(scratch.data());
        for (size_t i = 0; i < total; ++i) out[i] = scratch[i].real();
    }

    void from_real_masked(const std::vector<double>& r, std::vector<cplx>& out) {
        for (size_t i = 0; i < total; ++i) out[i] = cplx(r[i], 0.0);
        fft->forward(out.data());
        for (size_t i = 0; i < total; ++i)
            if (!keep[i]) out[i] = cplx(0.0, 0.0);
    }

    /// Nonlinear slope at a stage state: Nu = P[-u.grad u + div(F F^T - I)],
    /// NF = -u.grad F + (grad u) F, products dealiased. Also reports the
    /// stress pairing <grad u, F F^T - I> and max|u| for the CFL guard.
    void nonlinear_rhs(const std::vector<cplx> (&uin)[2], const std::vector<cplx> (&Fin)[4],
                       std::vector<cplx> (&Nu)[2], std::vector<cplx> (&NF)[4], StageAux& aux) {
        for (int i = 0; i < 2; ++i) {
            to_real(uin[i], r_u[i]);
            for (int j = 0; j < 2; ++j) deriv_to_real(uin[i], j, r_gu[i][j]);
        }
        for (int i = 0; i < 4; ++i) {
            to_real(Fin[i], r_F[i]);
            if (!cfg.freeze_F)
                for (int l = 0; l < 2; ++l) deriv_to_real(Fin[i], l, r_dF[i][l]);
        }

        double max_u_sq = 0.0;
        for (size_t p = 0; p < total; ++p) {
            const double m = r_u[0][p] * r_u[0][p] + r_u[1][p] * r_u[1][p];
            if (m > max_u_sq) max_u_sq = m;
        }
        aux.max_u = std::sqrt(max_u_sq);

        // F F^T - I (symmetric; components 00, 01, 11) and the stress pairing.
        double pairing = 0.0;
        {
            auto& p00 = r_prod[0];
            auto& p01 = r_prod[1];
            auto& p11 = r_prod[2];
            for (size_t p = 0; p < total; ++p) {
                const double f00 = r_F[0][p], f01 = r_F[1][p], f10 = r_F[2][p], f11 = r_F[3][p];
                p00[p] = f00 * f00 + f01 * f01 - 1.0;
                p01[p] = f00 * f10 + f01 * f11;
                p11[p] = f10 * f10 + f11 * f11 - 1.0;
                pairing += r_gu[0][0][p] * p00[p] + (r_gu[0][1][p] + r_gu[1][0][p]) * p01[p] +
                           r_gu[1][1][p] * p11[p];
            }
            aux.stress_pairing = pairing * grid.cell_area();
            from_real_masked(p00, h_P[0]);
            from_real_masked(p01, h_P[1]);
            from_real_masked(p11, h_P[2]);
        }

        if (!cfg.drop_nonlinear) {
            for (int i = 0; i < 2; ++i) {
                auto& dst = r_prod[3];
                for (size_t p = 0; p < total; ++p)
                    dst[p] = r_u[0][p] * r_gu[i][0][p] + r_u[1][p] * r_gu[i][1][p];
                from_real_masked(dst, h_convU[i]);
            }
        } else {
            for (int i = 0; i < 2; ++i) std::fill(h_convU[i].begin(), h_convU[i].end(), cplx(0, 0));
        }

        if (!cfg.freeze_F) {
            for (int c = 0; c < 4; ++c) {
                const int i = c / 2;
                auto& dst = r_prod[3];
                for (size_t p = 0; p < total; ++p)
                    dst[p] = r_u[0][p] * r_dF[c][0][p] + r_u[1][p] * r_dF[c][1][p];
                from_real_masked(dst, h_convF[c]);
                for (size_t p = 0; p < total; ++p)
                    dst[p] = r_gu[i][0][p] * r_F[2 * 0 + (c % 2)][p] +
                             r_gu[i][1][p] * r_F[2 * 1 + (c % 2)][p];
                from_real_masked(dst, h_guF[c]);
            }
        }

        // Momentum slope: project -convU + div(P) onto divergence-free fields.
        for (size_t p = 0; p < total; ++p) {
            const cplx divP0 = cplx(0.0, 1.0) * (k1[p] * h_P[0][p] + k2[p] * h_P[1][p]);
            const cplx divP1 = cplx(0.0, 1.0) * (k1[p] * h_P[1][p] + k2[p] * h_P[2][p]);
            cplx t0 = divP0 - h_convU[0][p];
            cplx t1 = divP1 - h_convU[1][p];
            if (ksq[p] > 0.0) {
                const cplx kdot = (k1[p] * t0 + k2[p] * t1) / ksq[p];
                t0 -= k1[p] * kdot;
                t1 -= k2[p] * kdot;
            }
            Nu[0][p] = t0;
            Nu[1][p] = t1;
        }

        if (cfg.freeze_F) {
            for (int c = 0; c < 4; ++c) std::fill(NF[c].begin(), NF[c].end(), cplx(0, 0));
        } else {
            for (int c = 0; c < 4; ++c)
                for (size_t p = 0; p < total; ++p) NF[c][p] = h_guF[c][p] - h_convF[c][p];
        }
    }

    /// mu*||grad u||^2 + delta*||lap u||^2 and mu*||lap u||^2 at a stage state.
    void stage_work(const std::vector<cplx> (&uin)[2], double& dissipation, double& palinstrophy) {
        double g = 0.0, l = 0.0;
        for (size_t p = 0; p < total; ++p) {
            const double m = std::norm(uin[0][p]) + std::norm(uin[1][p]);
            g += ksq[p] * m;
            l += ksq[p] * ksq[p] * m;
        }
        g *= spectral_norm_scale;
        l *= spectral_norm_scale;
        dissipation = cfg.mu * g + delta * l;
        palinstrophy = cfg.mu * l;
    }

    void check_cfl(double max_u) const {
        if (cfg.drop_nonlinear) return;  // ceiling is advection-limited
        if (max_u <= 0.0) return;
        const double ceiling = cfg.cfl_c / (max_u * grid.n);
        if (cfg.dt > ceiling)
            throw CflExceeded("dt = " + std::to_string(cfg.dt) + " exceeds advective ceiling " +
                              std::to_string(ceiling));
    }

    void check_finite() const {
        auto bad = [&](const std::vector<cplx>& v) {
            double acc = 0.0;
            for (const auto& c : v) acc += std::abs(c.real()) + std::abs(c.imag());
            return !std::isfinite(acc);
        };
        if (bad(u[0]) || bad(u[1]) || bad(F[0]) || bad(F[3]))
            throw StepDiverged("non-finite field at t = " + std::to_string(t));
    }

    void step() {
        const double dt = cfg.dt;
        StageAux aux1, aux2, aux3, aux4;
        double w1, w2, w3, w4, q1, q2, q3, q4;

        if (cfg.scheme == Scheme::if_rk4) {
            // stage 1 at (u, F)
            stage_work(u, w1, q1);
            nonlinear_rhs(u, F, ka_u[0], ka_F[0], aux1);
            check_cfl(aux1.max_u);

            // stage 2: E*(u + dt/2 a)
            for (int i = 0; i < 2; ++i)
                for (size_t p = 0; p < total; ++p)
                    su[i][p] = e_half[p] * (u[i][p] + 0.5 * dt * ka_u[0][i][p]);
            for (int c = 0; c < 4; ++c)
                for (size_t p = 0; p < total; ++p) sF[c][p] = F[c][p] + 0.5 * dt * ka_F[0][c][p];
            stage_work(su, w2, q2);
            nonlinear_rhs(su, sF, ka_u[1], ka_F[1], aux2);

            // stage 3: E*u + dt/2 b
            for (int i = 0; i < 2; ++i)
                for (size_t p = 0; p < total; ++p)
                    su[i][p] = e_half[p] * u[i][p] + 0.5 * dt * ka_u[1][i][p];
            for (int c = 0; c < 4; ++c)
                for (size_t p = 0; p < total; ++p) sF[c][p] = F[c][p] + 0.5 * dt * ka_F[1][c][p];
            stage_work(su, w3, q3);
            nonlinear_rhs(su, sF, ka_u[2], ka_F[2], aux3);

            // stage 4: E2*u + dt*E*c
            for (int i = 0; i < 2; ++i)
                for (size_t p = 0; p < total; ++p)
                    su[i][p] = e_full[p] * u[i][p] + dt * e_half[p] * ka_u[2][i][p];
            for (int c = 0; c < 4; ++c)
                for (size_t p = 0; p < total; ++p) sF[c][p] = F[c][p] + dt * ka_F[2][c][p];
            stage_work(su, w4, q4);
            nonlinear_rhs(su, sF, ka_u[3], ka_F[3], aux4);

            for (int i = 0; i < 2; ++i)
                for (size_t p = 0; p < total; ++p) {
                    const cplx acc = e_full[p] * ka_u[0][i][p] +
                                     2.0 * e_half[p] * (ka_u[1][i][p] + ka_u[2][i][p]) +
                                     ka_u[3][i][p];
                    u[i][p] = e_full[p] * u[i][p] + (dt / 6.0) * acc;
                }
            for (int c = 0; c < 4; ++c)
                for (size_t p = 0; p < total; ++p) {
                    const cplx acc = ka_F[0][c][p] + 2.0 * (ka_F[1][c][p] + ka_F[2][c][p]) +
                                     ka_F[3][c][p];
                    F[c][p] += (dt / 6.0) * acc;
                }
            work.dissipation += dt / 6.0 * (w1 + 2.0 * (w2 + w3) + w4);
            work.palinstrophy += dt / 6.0 * (q1 + 2.0 * (q2 + q3) + q4);
            work.stress_pairing += dt / 6.0 * (aux1.stress_pairing +
                                               2.0 * (aux2.stress_pairing + aux3.stress_pairing) +
                                               aux4.stress_pairing);
        } else {
            // integrating-factor midpoint rule
            nonlinear_rhs(u, F, ka_u[0], ka_F[0], aux1);
            check_cfl(aux1.max_u);
            for (int i = 0; i < 2; ++i)
                for (size_t p = 0; p < total; ++p)
                    su[i][p] = e_half[p] * (u[i][p] + 0.5 * dt * ka_u[0][i][p]);
            for (int c = 0; c < 4; ++c)
                for (size_t p = 0; p < total; ++p) sF[c][p] = F[c][p] + 0.5 * dt * ka_F[0][c][p];
            stage_work(su, w2, q2);
            nonlinear_rhs(su, sF, ka_u[1], ka_F[1], aux2);
            for (int i = 0; i < 2; ++i)
                for (size_t p = 0; p < total; ++p)
                    u[i][p] = e_full[p] * u[i][p] + dt * e_half[p] * ka_u[1][i][p];
            for (int c = 0; c < 4; ++c)
                for (size_t p = 0; p < total; ++p) F[c][p] += dt * ka_F[1][c][p];
            work.dissipation += dt * w2;
            work.palinstrophy += dt * q2;
            work.stress_pairing += dt * aux2.stress_pairing;
        }

        // Keep u exactly in the range of the projector (counters roundoff
        // drift of k.u over long runs).
        for (size_t p = 0; p < total; ++p) {
            if (ksq[p] == 0.0) continue;
            const cplx kdot = (k1[p] * u[0][p] + k2[p] * u[1][p]) / ksq[p];
            u[0][p] -= k1[p] * kdot;
            u[1][p] -= k2[p] * kdot;
        }

        t += dt;
        check_finite();
    }

    SimState state() const {
        SimState s(grid);
        s.t = t;
        s.delta = delta;
        for (int i = 0; i < 2; ++i) s.u.comp(i).mutable_spectral().assign(u[i].begin(), u[i].end());
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                s.F.comp(i, j).mutable_spectral().assign(F[2 * i + j].begin(), F[2 * i + j].end());
        return s;
    }
};

Stepper::Stepper(const SimState& s0, const StepperConfig& cfg)
    : impl_(std::make_shared<Impl>(s0, cfg)) {}

void Stepper::step() { impl_->step(); }
SimState Stepper::state() const { return impl_->state(); }
double Stepper::t() const { return impl_->t; }
const WorkIntegrals& Stepper::work() const { return impl_->work; }

void Stepper::canonicalize() {
    SimState s = impl_->state();
    // Force the real-space view (exactly what a checkpoint stores), then
    // reload through the same transform path a resume would take.
    for (int i = 0; i < 2; ++i) s.u.comp(i).real();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) s.F.comp(i, j).real();
    impl_->load(s);
}

SimState step(const SimState& s, const StepperConfig& cfg) {
    Stepper st(s, cfg);
    st.step();
    return st.state();
}

std::pair<VectorField, MatrixField> rhs(const SimState& s, const StepperConfig& cfg) {
    const GridSpec& g = s.grid();
    // nonlinear part
    Stepper::Impl impl(s, cfg);
    StageAux aux;
    std::vector<cplx> nu[2], nf[4];
    for (int i = 0; i < 2; ++i) nu[i].assign(impl.total, cplx(0, 0));
    for (int i = 0; i < 4; ++i) nf[i].assign(impl.total, cplx(0, 0));
    impl.nonlinear_rhs(impl.u, impl.F, nu, nf, aux);

    VectorField du(g);
    MatrixField dF(g);
    for (int i = 0; i < 2; ++i) {
        auto& sp = du.comp(i).mutable_spectral();
        for (size_t p = 0; p < impl.total; ++p) {
            const double lin = -cfg.mu * impl.ksq[p] -
                               s.delta * impl.ksq[p] * impl.ksq[p];
            sp[p] = nu[i][p] + lin * impl.u[i][p];
        }
    }
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            auto& sp = dF.comp(i, j).mutable_spectral();
            const auto& src = nf[2 * i + j];
            sp.assign(src.begin(), src.end());
        }
    return {std::move(du), std::move(dF)};
}

SimState simulate(const SimState& s0, double T, const StepperConfig& cfg,
                  const SimulateSinks& sinks, const DiagSettings& diag) {
    cfg.validate();
    if (T < s0.t) throw ConfigError("horizon T lies before the state's time");

    const double dt = cfg.dt;
    const long long k0 = std::llround(s0.t / dt);
    if (std::abs(k0 * dt - s0.t) > 1e-9 * std::max(1.0, std::abs(s0.t)))
        throw ConfigError("state time is not a multiple of dt; cannot schedule steps");
    const long long K = std::llround(T / dt);
    if (std::abs(K * dt - T) > 1e-9 * std::max(1.0, T))
        throw ConfigError("horizon T is not a multiple of dt");

    Stepper stepper(s0, cfg);

    RunningStats stats;
    stats.epsilon0 = (s0.t == 0.0) ? epsilon0(s0) : 0.0;

    SimState last_good = s0;

    auto emit = [&](long long k, const SimState& snap) {
        stats.dissipation_integral = stepper.work().dissipation;
        stats.stress_pairing_integral = stepper.work().stress_pairing;
        stats.palinstrophy_integral = stepper.work().palinstrophy;
        DiagnosticsRecord rec = evaluate_diagnostics(snap, stats, diag);
        stats.b_running = rec.b_running;
        if (sinks.on_record) sinks.on_record(rec);
        (void)k;
    };

    {
        SimState snap = s0;
        emit(k0, snap);
        if (sinks.on_snapshot && sinks.snapshot_every > 0) sinks.on_snapshot(snap);
    }

    for (long long k = k0 + 1; k <= K; ++k) {
        try {
            stepper.step();
        } catch (const StepDiverged&) {
            if (sinks.on_checkpoint) sinks.on_checkpoint(last_good, k - 1, true);
            throw;
        }

        const bool rec_due = sinks.record_every > 0 && ((k - k0) % sinks.record_every == 0);
        const bool snap_due =
            sinks.snapshot_every > 0 && ((k - k0) % sinks.snapshot_every == 0);
        const bool ckpt_due =
            sinks.checkpoint_every > 0 && ((k - k0) % sinks.checkpoint_every == 0);
        const bool last = (k == K);
        if (!(rec_due || snap_due || ckpt_due || last)) continue;

        SimState snap = stepper.state();
        snap.t = static_cast<double>(k) * dt;  // exact node time, resume-stable
        if (rec_due || last) {
            emit(k, snap);
            last_good = snap;
        }
        if (snap_due && sinks.on_snapshot) sinks.on_snapshot(snap);
        if ((ckpt_due || last) && sinks.on_checkpoint) {
            sinks.on_checkpoint(snap, k, last);
            // Continue from the state a resume would reconstruct, so both
            // paths agree bit for bit.
            if (!last) stepper.canonicalize();
        }
    }
    if (K == k0 && sinks.on_checkpoint) sinks.on_checkpoint(s0, K, true);
    SimState out = stepper.state();
    out.t = static_cast<double>(K) * dt;
    return out;
}

}  // namespace visco2d
