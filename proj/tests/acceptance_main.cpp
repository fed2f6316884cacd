// Acceptance suite: one criterion per check, one PASS/FAIL line each, exit
// code = number of failed criteria. Tolerances are pinned here, not
// calibrated at run time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "visco2d/checkpoint.hpp"
#include "visco2d/errors.hpp"
#include "visco2d/family.hpp"
#include "visco2d/ndjson.hpp"
#include "visco2d/rng.hpp"
#include "visco2d/stepper.hpp"
#include "visco2d/trajectory.hpp"

using namespace visco2d;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] C%-2d %s — %s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

InitialDataSpec base_init(double eps0_target) {
    InitialDataSpec spec;
    spec.amplitude = 0.07;
    spec.seed = 42;
    spec.kmin = 1;
    spec.kmax = 3;
    spec.preflow_time = 0.1;
    spec.preflow_velocity = PreflowKind::sinsin;
    spec.preflow_amplitude = 0.35;
    spec.preflow_dt = 1e-3;
    spec.epsilon0_target = eps0_target;
    return spec;
}

struct RunSummary {
    std::vector<DiagnosticsRecord> records;
    double epsilon0 = 0.0;

    double max_energy_resid_rel() const {
        const double E0 = records.front().energy;
        double worst = 0.0;
        for (const auto& r : records)
            worst = std::max(worst,
                             std::abs(r.energy + r.dissipation_integral - E0) / std::max(E0, 1e-300));
        return worst;
    }
    double max_of(double DiagnosticsRecord::*member) const {
        double worst = 0.0;
        for (const auto& r : records) worst = std::max(worst, r.*member);
        return worst;
    }
};

RunSummary collect_run(const SimState& s0, double T, const StepperConfig& cfg,
                       long long record_every, bool full, int holder_m = 32) {
    RunSummary out;
    out.epsilon0 = s0.t == 0.0 ? epsilon0(s0) : 0.0;
    SimulateSinks sinks;
    sinks.record_every = record_every;
    sinks.on_record = [&](const DiagnosticsRecord& r) { out.records.push_back(r); };
    DiagSettings diag;
    diag.mu = cfg.mu;
    diag.full = full;
    diag.holder_m = holder_m;
    (void)simulate(s0, T, cfg, sinks, diag);
    return out;
}

SnapshotSeries collect_snapshots(const SimState& s0, double T, const StepperConfig& cfg,
                                 long long snapshot_every) {
    SnapshotSeries series;
    SimulateSinks sinks;
    sinks.record_every = 0;
    sinks.snapshot_every = snapshot_every;
    sinks.on_snapshot = [&](const SimState& s) { series.states.push_back(s); };
    DiagSettings diag;
    diag.full = false;
    (void)simulate(s0, T, cfg, sinks, diag);
    return series;
}

// --- C1 ----------------------------------------------------------------------

void criterion_1() {
    const auto start = std::chrono::steady_clock::now();
    GridSpec g{64, Dealias::two_thirds};
    SimState s0(g);
    s0.delta = 1.0 / 16.0;
    StepperConfig cfg;
    cfg.dt = 1e-3;
    RunSummary run = collect_run(s0, 10.0, cfg, 100, true, 64);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    double worst = 0.0;
    for (const auto& r : run.records) {
        worst = std::max({worst, r.div_u_inf, r.div_ft_inf, r.det_drift_inf, r.compat_inf,
                          r.flux_identity_rel, r.flux_decomp_rel, r.pdiv_fmi_rel,
                          std::abs(r.energy + r.dissipation_integral), std::sqrt(r.u_l2_sq),
                          std::sqrt(r.f_minus_i_l2_sq)});
    }
    const bool pass = worst <= 1e-12 && elapsed < 60.0;
    report(1, "equilibrium fixed point over 1e4 steps", pass,
           "max residual " + fmt(worst) + " (<= 1e-12), runtime " + fmt(elapsed) + "s (< 60)");
}

// --- C2..C5 share the small-data n=128 run pair ------------------------------

void criteria_2_to_5() {
    GridSpec g{128, Dealias::two_thirds};
    SimState s0 = preflow_init(base_init(1e-2), g);
    s0.delta = 1.0 / 16.0;

    StepperConfig cfg_a;
    cfg_a.dt = 1e-3;
    RunSummary run_a = collect_run(s0, 1.0, cfg_a, 10, true);

    StepperConfig cfg_b;
    cfg_b.dt = 5e-4;
    RunSummary run_b = collect_run(s0, 1.0, cfg_b, 20, false);

    {
        const double ra = run_a.max_energy_resid_rel();
        const double rb = run_b.max_energy_resid_rel();
        const bool pass = ra <= 1e-6 && ra / rb >= 4.0;
        report(2, "energy law at scheme accuracy", pass,
               "relative residual " + fmt(ra) + " (<= 1e-6), dt/2 improvement " +
                   fmt(ra / rb) + "x (>= 4)");
    }
    {
        struct Probe {
            const char* name;
            double DiagnosticsRecord::*member;
        };
        const Probe probes[] = {{"det", &DiagnosticsRecord::det_drift_inf},
                                {"divFt", &DiagnosticsRecord::div_ft_inf},
                                {"compat", &DiagnosticsRecord::compat_inf}};
        bool pass = true;
        std::string detail;
        for (const auto& p : probes) {
            const double ma = run_a.max_of(p.member);
            const double mb = run_b.max_of(p.member);
            const bool bounded = ma <= 1e-6;
            const bool shrinks = ma / mb >= 4.0;
            pass = pass && bounded && shrinks;
            detail += std::string(p.name) + " " + fmt(ma) + "->" + fmt(mb) +
                      (bounded ? "" : " OVER-BOUND") + (shrinks ? "" : " NO-SHRINK") + "; ";
        }
        report(3, "constraint preservation under dt refinement", pass, detail);
    }
    {
        const double worst = run_a.max_of(&DiagnosticsRecord::flux_identity_rel);
        report(4, "effective-flux identity at every sampled step", worst <= 1e-10,
               "max relative residual " + fmt(worst) + " (<= 1e-10)");
    }
    {
        double worst = 0.0;
        bool qualified = false;
        for (const auto& r : run_a.records)
            if (r.div_ft_inf <= 1e-8) {
                qualified = true;
                worst = std::max(worst, r.flux_decomp_rel);
            }
        report(5, "flux decomposition assembly identity", qualified && worst <= 1e-8,
               "max relative residual " + fmt(worst) + " (<= 1e-8)");
    }
}

// --- C6, C7: trajectory work --------------------------------------------------

void criteria_6_7() {
    GridSpec g{64, Dealias::two_thirds};
    SimState s0 = preflow_init(base_init(1e-2), g);
    s0.delta = 1.0 / 16.0;
    StepperConfig cfg;
    cfg.dt = 2.5e-3;
    SnapshotSeries series = collect_snapshots(s0, 1.0, cfg, 2);  // spacing 5e-3

    std::vector<Vec2> seeds;
    Rng rng(2024);
    for (int i = 0; i < 64; ++i) seeds.push_back({kTwoPi * rng.uniform(), kTwoPi * rng.uniform()});

    auto route_error = [&](double dt_traj, int output_every) {
        AdvectOptions opts;
        opts.dt_traj = dt_traj;
        opts.output_every = output_every;
        TrajectoryBundle bundle = advect(seeds, series, opts);
        double worst = 0.0;
        for (size_t i = 0; i < seeds.size(); ++i)
            for (const auto& sample : bundle.samples[i]) {
                const size_t snap = size_t(std::llround(sample.t / series.spacing()));
                const SimState& st = series.states[snap];
                double num = 0.0, den = 0.0;
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 2; ++c) {
                        const double eul =
                            ops::evaluate_at(st.F.comp(r, c), sample.x.x1, sample.x.x2);
                        num += std::pow(eul - sample.F_path[size_t(2 * r + c)], 2);
                        den += eul * eul;
                    }
                worst = std::max(worst, std::sqrt(num / den));
            }
        return worst;
    };

    {
        const double coarse = route_error(2e-2, 5);
        const double fine = route_error(1e-2, 10);
        const bool pass = coarse <= 1e-4 && fine <= coarse * 1.05;
        report(6, "Lagrangian/Eulerian transport-route oracle", pass,
               "max relative gap " + fmt(coarse) + " (<= 1e-4), refined " + fmt(fine));
    }
    {
        AdvectOptions opts;
        opts.dt_traj = 5e-3;
        opts.output_every = 1;
        TrajectoryBundle bundle = advect(seeds, series, opts);
        PathwiseReport rep = pathwise_identity_check(bundle, 1e-8);
        bool abort_ok = false;
        {
            TrajectoryBundle bad;
            bad.seeds = {{0.0, 0.0}};
            bad.dt_out = 0.1;
            bad.samples.resize(1);
            for (int k = 0; k < 3; ++k) {
                TrajectorySample s;
                s.t = 0.1 * k;
                s.F_path = {1.9, 0.0, 0.0, 1.0};
                bad.samples[0].push_back(s);
            }
            try {
                (void)pathwise_identity_check(bad);
            } catch (const PrerequisiteViolated&) {
                abort_ok = true;
            }
        }
        const bool pass = rep.min_chain_margin >= 0.0 && rep.min_absorbed_margin >= 0.0 &&
                          rep.max_f_minus_i <= 0.5 && abort_ok;
        report(7, "pathwise differential inequality along trajectories", pass,
               "min margins " + fmt(rep.min_chain_margin) + "/" + fmt(rep.min_absorbed_margin) +
                   " (>= 0), observed M " + fmt(rep.observed_M) + " <= " + fmt(rep.explicit_M) +
                   ", prerequisite abort " + (abort_ok ? "ok" : "MISSING"));
    }
}

// --- C8: delta family ----------------------------------------------------------

void criterion_8() {
    FamilySpec spec;
    spec.delta_inverses = {4, 8, 16, 32, 64};
    spec.grid = GridSpec{64, Dealias::two_thirds};
    spec.stepper.dt = 2e-3;
    spec.init = base_init(1e-2);
    spec.horizon = 1.0;
    spec.compare_times = {1.0};
    spec.snapshot_every = 25;
    spec.workdir = "acceptance_family";
    FamilyReport rep = run_family(spec);
    fs::remove_all(spec.workdir);

    std::string detail = "eF(n): ";
    for (const auto& c : rep.comparisons) detail += fmt(c.e_F) + " ";
    detail += "| |D(n)|: ";
    for (const auto& c : rep.comparisons) detail += fmt(std::abs(c.defect)) + " ";
    bool all_ok = rep.e_decreasing && rep.defect_decreasing;
    for (const auto& m : rep.members) all_ok = all_ok && !m.failed;
    report(8, "strong-convergence family delta = 1/n", all_ok, detail);
}

// --- C9: weak forms -------------------------------------------------------------

void criterion_9() {
    GridSpec g{64, Dealias::two_thirds};
    SimState s0 = preflow_init(base_init(1e-2), g);
    s0.delta = 0.0;  // the weak formulation of the unregularized system, verbatim
    const double T = 0.8;

    auto residuals = [&](double dt, long long every) {
        StepperConfig cfg;
        cfg.dt = dt;
        SnapshotSeries series = collect_snapshots(s0, T, cfg, every);
        const TestFunction psi1 = solenoidal_test_function(1, 1, 0.2, T, "psi1");
        const TestFunction psi2 = solenoidal_test_function(2, -1, 1.1, T, "psi2");
        const TestFunction beta = generic_test_function(1, 2, 0.5, T, "beta");
        return std::array<double, 3>{weak_form_momentum_residual(series, psi1, cfg.mu),
                                     weak_form_momentum_residual(series, psi2, cfg.mu),
                                     weak_form_transport_residual(series, 0, beta)};
    };
    const auto coarse = residuals(2e-3, 20);  // spacing 0.04
    const auto fine = residuals(1e-3, 20);    // spacing 0.02 (dt and cadence halved)
    bool pass = true;
    std::string detail;
    for (int i = 0; i < 3; ++i) {
        const double ratio = coarse[size_t(i)] / fine[size_t(i)];
        pass = pass && ratio >= 4.0;
        detail += fmt(coarse[size_t(i)]) + "->" + fmt(fine[size_t(i)]) + " (" + fmt(ratio) +
                  "x); ";
    }
    report(9, "weak-form residuals under dt+cadence refinement", pass, detail + "(each >= 4x)");
}

// --- C10: smallness persistence --------------------------------------------------

void criterion_10() {
    GridSpec g{64, Dealias::two_thirds};
    StepperConfig cfg;
    cfg.dt = 2e-3;

    auto measure = [&](double eps_target) {
        SimState s0 = preflow_init(base_init(eps_target), g);
        s0.delta = 1.0 / 16.0;
        RunSummary run = collect_run(s0, 5.0, cfg, 25, true, 16);
        const double B = functional_B(run.records, 5.0);
        const double supA = functional_A(run.records, 5.0).sup_part;
        return std::tuple{run.epsilon0, B, supA};
    };
    const auto [eps1, b1, a1] = measure(1e-2);
    const auto [eps2, b2, a2] = measure(4e-2);
    const bool bounded = b1 <= 10.0 * eps1 && a1 <= 10.0 * eps1 && b2 <= 10.0 * eps2 &&
                         a2 <= 10.0 * eps2;
    const bool monotone = b1 <= b2 && a1 <= a2;
    report(10, "smallness persistence over T = 5", bounded && monotone,
           "eps0 " + fmt(eps1) + ": B " + fmt(b1) + ", supA " + fmt(a1) + " | eps0 " + fmt(eps2) +
               ": B " + fmt(b2) + ", supA " + fmt(a2) + " (each <= 10 eps0, monotone)");
}

// --- C11: degenerate-case guards --------------------------------------------------

void criterion_11() {
    bool reject_ok = false;
    try {
        InitialDataSpec spec = base_init(0.0);
        spec.preflow_amplitude = 4.0;
        spec.preflow_time = 1.0;
        (void)preflow_init(spec, GridSpec{64, Dealias::two_thirds});
    } catch (const InitRejected&) {
        reject_ok = true;
    }

    bool diagnose_ok = false;
    {
        GridSpec g{64, Dealias::two_thirds};
        SimState s(g);
        s.u.comp(0).mutable_real()[3] = std::numeric_limits<double>::quiet_NaN();
        write_checkpoint("acceptance_nan.ckpt", s);
        const std::string cmd = std::string(VISCO2D_CLI_PATH) +
                                " diagnose --checkpoint acceptance_nan.ckpt"
                                " > /dev/null 2> /dev/null";
        const int status = std::system(cmd.c_str());
        diagnose_ok = WIFEXITED(status) && WEXITSTATUS(status) == 3;
        fs::remove("acceptance_nan.ckpt");
    }
    report(11, "degenerate-case guards", reject_ok && diagnose_ok,
           std::string("oversized init rejected: ") + (reject_ok ? "yes" : "NO") +
               ", NaN checkpoint exits 3: " + (diagnose_ok ? "yes" : "NO"));
}

}  // namespace

int main() {
    std::printf("acceptance suite: 2D viscoelastic pseudo-spectral lab\n");
    criterion_1();
    criteria_2_to_5();
    criteria_6_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures;
}
