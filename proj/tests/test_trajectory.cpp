#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "visco2d/errors.hpp"
#include "visco2d/stepper.hpp"
#include "visco2d/trajectory.hpp"

using namespace visco2d;
using namespace visco2d::testing;

namespace {

SnapshotSeries run_snapshots(const SimState& s0, double T, StepperConfig cfg,
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

/// Steady series: the same state replicated at uniform times (for frozen
/// velocity fields).
SnapshotSeries steady_series(const SimState& s, double T, double spacing) {
    SnapshotSeries series;
    const int count = int(std::llround(T / spacing)) + 1;
    for (int k = 0; k < count; ++k) {
        SimState copy = s;
        copy.t = k * spacing;
        series.states.push_back(std::move(copy));
    }
    return series;
}

SimState small_state(const GridSpec& g, double delta) {
    InitialDataSpec spec;
    spec.amplitude = 0.1;
    spec.seed = 42;
    spec.kmax = 3;
    spec.preflow_time = 0.1;
    spec.preflow_amplitude = 0.3;
    spec.preflow_dt = 1e-3;
    SimState s = preflow_init(spec, g);
    s.delta = delta;
    return s;
}

}  // namespace

TEST_CASE("zero velocity: positions and F_path are constant") {
    GridSpec g{64, Dealias::two_thirds};
    SimState s(g);
    SnapshotSeries series = steady_series(s, 0.5, 0.05);
    AdvectOptions opts;
    opts.dt_traj = 0.1;
    std::vector<Vec2> seeds{{0.0, 0.0}, {1.0, 2.0}, {4.0, 5.5}, {6.2, 0.1}};
    TrajectoryBundle bundle = advect(seeds, series, opts);
    for (size_t i = 0; i < seeds.size(); ++i)
        for (const auto& sample : bundle.samples[i]) {
            CHECK(sample.x.x1 == doctest::Approx(std::fmod(seeds[i].x1, kTwoPi)).epsilon(1e-14));
            CHECK(sample.x.x2 == doctest::Approx(std::fmod(seeds[i].x2, kTwoPi)).epsilon(1e-14));
            CHECK(sample.F_path[0] == 1.0);
            CHECK(sample.F_path[1] == 0.0);
        }
    CHECK(bundle.min_det_F_path() == 1.0);
}

// Rigid-rotation oracle: u = a(-sin(x2 - pi), sin(x1 - pi)) rotates points
// near the box center on near-circles; for small radius the radius is
// conserved to O(r^3) and the RK4 drift is far below that.
TEST_CASE("near-circular trajectories around the box center") {
    GridSpec g{64, Dealias::two_thirds};
    SimState s(g);
    const double a = 1.0;
    s.u.comp(0).fill_from([a](double, double x2) { return -a * std::sin(x2 - M_PI); });
    s.u.comp(1).fill_from([a](double x1, double) { return a * std::sin(x1 - M_PI); });

    // Steady field over one full period (6.3 > 2 pi); at h = 0.05 the RK4
    // path error sits far below the level-set deviation of the near-circle.
    SnapshotSeries series = steady_series(s, 6.3, 0.05);
    AdvectOptions opts;
    opts.dt_traj = 0.05;
    opts.output_every = 2;

    const double r = 0.02;
    std::vector<Vec2> seeds{{M_PI + r, M_PI}, {M_PI, M_PI + r}};
    TrajectoryBundle bundle = advect(seeds, series, opts);
    for (const auto& path : bundle.samples)
        for (const auto& sample : path) {
            const double rr = std::hypot(sample.x.x1 - M_PI, sample.x.x2 - M_PI);
            CHECK(std::abs(rr - r) < 1e-6);
        }
}

// Core oracle of the module: the Lagrangian deformation gradient integrated
// along paths must agree with the Eulerian F evaluated at the path points.
TEST_CASE("transport-route equivalence and dt refinement") {
    GridSpec g{64, Dealias::two_thirds};
    SimState s0 = small_state(g, 1.0 / 16.0);
    StepperConfig cfg;
    cfg.dt = 2.5e-3;
    const double T = 0.5;
    SnapshotSeries series = run_snapshots(s0, T, cfg, 2);  // spacing 5e-3

    std::vector<Vec2> seeds;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) seeds.push_back({0.3 + i * 1.5, 0.7 + j * 1.5});

    auto route_error = [&](double dt_traj) {
        AdvectOptions opts;
        opts.dt_traj = dt_traj;
        opts.output_every = std::max(1, int(std::llround(0.1 / dt_traj)));
        TrajectoryBundle bundle = advect(seeds, series, opts);
        double worst = 0.0;
        const auto& final_states = series.states;
        for (size_t i = 0; i < seeds.size(); ++i) {
            for (const auto& sample : bundle.samples[i]) {
                const size_t snap = size_t(std::llround(sample.t / series.spacing()));
                const SimState& st = final_states[snap];
                double eul[4], rel = 0.0, scale = 0.0;
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 2; ++c) {
                        eul[2 * r + c] = ops::evaluate_at(st.F.comp(r, c), sample.x.x1, sample.x.x2);
                        rel += std::pow(eul[2 * r + c] - sample.F_path[size_t(2 * r + c)], 2);
                        scale += eul[2 * r + c] * eul[2 * r + c];
                    }
                worst = std::max(worst, std::sqrt(rel / scale));
            }
        }
        return worst;
    };

    const double e1 = route_error(2e-2);
    CHECK(e1 < 1e-4);
    const double e2 = route_error(1e-2);
    CHECK(e2 <= e1 * 1.05);  // refining the path step does not degrade the match
}

TEST_CASE("frozen-F identity reduction") {
    GridSpec g{64, Dealias::two_thirds};
    InitialDataSpec spec;
    spec.amplitude = 0.02;
    spec.seed = 11;
    spec.kmax = 3;
    SimState s0 = preflow_init(spec, g);
    s0.delta = 1.0 / 16.0;
    StepperConfig cfg;
    cfg.dt = 1e-3;
    cfg.freeze_F = true;
    const double T = 0.05;
    SnapshotSeries series = run_snapshots(s0, T, cfg, 1);

    std::vector<Vec2> seeds{{1.1, 2.2}, {3.3, 4.4}, {5.5, 0.6}, {2.5, 5.1}};
    AdvectOptions opts;
    opts.dt_traj = 2e-3;
    TrajectoryBundle bundle = advect(seeds, series, opts);

    // With F frozen at I the Eulerian Gf is grad u, and the pathwise residual
    // reduces to d(F_path)/dt - grad u plus O(|F_path - I|) corrections.
    PathwiseReport rep = pathwise_identity_check(bundle);
    CHECK(rep.max_identity_resid < 1e-6 + 2.0 * rep.max_f_minus_i);
    CHECK(rep.max_f_minus_i < 1e-2);
}

TEST_CASE("pathwise identity and absorbed inequality on a small-data run") {
    GridSpec g{64, Dealias::two_thirds};
    SimState s0 = small_state(g, 1.0 / 16.0);
    StepperConfig cfg;
    cfg.dt = 2.5e-3;
    const double T = 0.5;
    SnapshotSeries series = run_snapshots(s0, T, cfg, 2);

    std::vector<Vec2> seeds;
    Rng rng(17);
    for (int i = 0; i < 16; ++i) seeds.push_back({kTwoPi * rng.uniform(), kTwoPi * rng.uniform()});

    AdvectOptions opts;
    opts.dt_traj = 5e-3;
    opts.output_every = 1;
    TrajectoryBundle bundle = advect(seeds, series, opts);
    PathwiseReport rep = pathwise_identity_check(bundle, 1e-8);
    CHECK(rep.samples_checked > 0);
    CHECK(rep.max_identity_resid < 1e-4);
    CHECK(rep.min_chain_margin >= 0.0);
    CHECK(rep.min_absorbed_margin >= 0.0);
    CHECK(rep.observed_M <= rep.explicit_M);
    CHECK(rep.min_det > 0.0);
}

TEST_CASE("pathwise check rejects states beyond the smallness prerequisite") {
    TrajectoryBundle bundle;
    bundle.seeds = {{0.0, 0.0}};
    bundle.dt_out = 0.1;
    bundle.samples.resize(1);
    for (int k = 0; k < 3; ++k) {
        TrajectorySample s;
        s.t = 0.1 * k;
        s.F_path = {1.8, 0.0, 0.0, 1.0};  // |F - I| = 0.8 > 1/2
        bundle.samples[0].push_back(s);
    }
    CHECK_THROWS_AS((void)pathwise_identity_check(bundle), PrerequisiteViolated);
}

TEST_CASE("forward-backward advection returns the seeds") {
    GridSpec g{64, Dealias::two_thirds};
    SimState s0 = small_state(g, 1.0 / 16.0);
    StepperConfig cfg;
    cfg.dt = 2.5e-3;
    const double T = 0.25;
    SnapshotSeries series = run_snapshots(s0, T, cfg, 2);

    std::vector<Vec2> seeds{{0.4, 0.9}, {2.7, 3.1}, {5.9, 1.3}};
    AdvectOptions opts;
    opts.dt_traj = 5e-3;
    TrajectoryBundle fwd = advect(seeds, series, opts);

    std::vector<Vec2> endpoints;
    for (const auto& path : fwd.samples) endpoints.push_back(path.back().x);

    SnapshotSeries rev = reversed(series);
    TrajectoryBundle back = advect(endpoints, rev, opts);
    for (size_t i = 0; i < seeds.size(); ++i) {
        const Vec2 ret = back.samples[i].back().x;
        const double d1 = std::abs(ret.x1 - seeds[i].x1);
        const double d2 = std::abs(ret.x2 - seeds[i].x2);
        CHECK(std::min(d1, kTwoPi - d1) < 1e-6);
        CHECK(std::min(d2, kTwoPi - d2) < 1e-6);
    }
}

TEST_CASE("flow map preserves volume on seed triads") {
    GridSpec g{64, Dealias::two_thirds};
    SimState s0 = small_state(g, 1.0 / 16.0);
    StepperConfig cfg;
    cfg.dt = 2.5e-3;
    const double T = 0.5;
    SnapshotSeries series = run_snapshots(s0, T, cfg, 2);

    const double h = 1e-3;
    std::vector<Vec2> seeds;
    std::vector<Vec2> bases{{1.0, 1.0}, {3.0, 4.0}, {5.0, 2.5}};
    for (const auto& b : bases) {
        seeds.push_back(b);
        seeds.push_back({b.x1 + h, b.x2});
        seeds.push_back({b.x1, b.x2 + h});
    }
    AdvectOptions opts;
    opts.dt_traj = 1e-2;
    opts.output_every = 50;
    TrajectoryBundle bundle = advect(seeds, series, opts);
    for (size_t t = 0; t < bases.size(); ++t) {
        const Vec2 x0 = bundle.samples[3 * t].back().x;
        const Vec2 x1 = bundle.samples[3 * t + 1].back().x;
        const Vec2 x2 = bundle.samples[3 * t + 2].back().x;
        auto wrapd = [](double d) {
            d = std::fmod(d + M_PI + kTwoPi, kTwoPi) - M_PI;
            return d;
        };
        const double a11 = wrapd(x1.x1 - x0.x1) / h;
        const double a21 = wrapd(x1.x2 - x0.x2) / h;
        const double a12 = wrapd(x2.x1 - x0.x1) / h;
        const double a22 = wrapd(x2.x2 - x0.x2) / h;
        CHECK(std::abs(a11 * a22 - a12 * a21 - 1.0) < 1e-3);
    }
}

TEST_CASE("cadence guards") {
    GridSpec g{64, Dealias::two_thirds};
    SimState s(g);
    SnapshotSeries series = steady_series(s, 0.2, 0.1);
    AdvectOptions opts;
    opts.dt_traj = 0.05;  // finer than the snapshot spacing
    std::vector<Vec2> seeds{{1.0, 1.0}};
    CHECK_THROWS_AS((void)advect(seeds, series, opts), CadenceTooCoarse);
}

TEST_CASE("seeds outside the box are wrapped, not rejected") {
    GridSpec g{64, Dealias::two_thirds};
    SimState s(g);
    SnapshotSeries series = steady_series(s, 0.2, 0.05);
    AdvectOptions opts;
    opts.dt_traj = 0.1;
    std::vector<Vec2> seeds{{-1.0, 9.0}};
    TrajectoryBundle bundle = advect(seeds, series, opts);
    const Vec2 x = bundle.samples[0].front().x;
    CHECK(x.x1 >= 0.0);
    CHECK(x.x1 < kTwoPi);
    CHECK(x.x2 >= 0.0);
    CHECK(x.x2 < kTwoPi);
}

TEST_CASE("trajectory NDJSON is one parsable line per sample") {
    GridSpec g{64, Dealias::two_thirds};
    SimState s(g);
    SnapshotSeries series = steady_series(s, 0.2, 0.05);
    AdvectOptions opts;
    opts.dt_traj = 0.1;
    std::vector<Vec2> seeds{{1.0, 1.0}, {2.0, 2.0}};
    TrajectoryBundle bundle = advect(seeds, series, opts);
    const std::string text = trajectory_to_ndjson(bundle);
    size_t lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == seeds.size() * bundle.samples[0].size());
    CHECK(text.find("\"det_F_path\":1") != std::string::npos);
}
