// Command-line driver: simulate / family / diagnose / trajectories.
//
// Exit codes: 0 success, 1 configuration error, 2 diverged run,
// 3 bad stored artifact (magic/version/integrity).

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "visco2d/checkpoint.hpp"
#include "visco2d/config.hpp"
#include "visco2d/errors.hpp"
#include "visco2d/family.hpp"
#include "visco2d/ndjson.hpp"
#include "visco2d/stepper.hpp"
#include "visco2d/trajectory.hpp"

namespace fs = std::filesystem;
using namespace visco2d;

namespace {

int run_simulate(const std::string& config_path, const std::string& resume_path) {
    RunConfig cfg = load_config(config_path);

    SimState s0(cfg.grid);
    if (!resume_path.empty()) {
        s0 = read_checkpoint(resume_path, cfg.grid.dealias);
        if (s0.grid().n != cfg.grid.n)
            throw ConfigError("checkpoint grid does not match config grid");
        if (std::abs(s0.delta - cfg.delta) > 0.0)
            throw ConfigError("checkpoint delta does not match config delta");
        if (!all_finite(s0)) throw BadArtifact("checkpoint contains non-finite values");
    } else {
        s0 = preflow_init(cfg.init, cfg.grid);
        s0.delta = cfg.delta;
    }

    fs::create_directories(cfg.directory);
    std::ofstream ndjson, csv;
    if (cfg.format_ndjson) ndjson.open(cfg.directory + "/diag.ndjson", std::ios::trunc);
    if (cfg.format_csv) {
        csv.open(cfg.directory + "/diag.csv", std::ios::trunc);
        csv << diagnostics_csv_header() << "\n";
    }

    SimulateSinks sinks;
    sinks.record_every = cfg.cadence;
    sinks.checkpoint_every = cfg.checkpoint_every;
    sinks.on_record = [&](const DiagnosticsRecord& r) {
        if (ndjson.is_open()) {
            ndjson << diagnostics_to_ndjson(r) << "\n";
            ndjson.flush();
        }
        if (csv.is_open()) {
            csv << diagnostics_to_csv(r) << "\n";
            csv.flush();
        }
    };
    sinks.on_checkpoint = [&](const SimState& s, long long step, bool is_final) {
        if (is_final) {
            write_checkpoint(cfg.directory + "/final.ckpt", s);
        } else {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "/ckpt_%09lld.bin", step);
            write_checkpoint(cfg.directory + buf, s);
        }
    };

    DiagSettings diag;
    diag.mu = cfg.stepper.mu;
    diag.holder_m = cfg.holder_m;
    diag.holder_alpha = cfg.holder_alpha;

    (void)simulate(s0, cfg.horizon, cfg.stepper, sinks, diag);
    return 0;
}

int run_family_cmd(const std::string& config_path) {
    RunConfig cfg = load_config(config_path);
    FamilySpec spec = cfg.family_spec();
    FamilyReport report = run_family(spec);
    fs::create_directories(cfg.directory);
    std::ofstream out(cfg.directory + "/family_report.ndjson", std::ios::trunc);
    out << report.to_ndjson();
    std::cout << report.to_ndjson();
    return 0;
}

int run_diagnose(const std::string& checkpoint_path, double mu) {
    SimState s = read_checkpoint(checkpoint_path);
    if (!all_finite(s))
        throw BadArtifact("checkpoint contains non-finite field values: " + checkpoint_path);
    RunningStats stats;
    stats.epsilon0 = s.t == 0.0 ? epsilon0(s) : 0.0;
    DiagSettings settings;
    settings.mu = mu;
    DiagnosticsRecord rec = evaluate_diagnostics(s, stats, settings);
    std::cout << diagnostics_to_ndjson(rec) << "\n";
    return 0;
}

int run_trajectories(const std::string& config_path, const std::string& seeds_path,
                     const std::string& out_path) {
    RunConfig cfg = load_config(config_path);

    std::vector<Vec2> seeds;
    {
        std::ifstream in(seeds_path);
        if (!in) throw ConfigError("cannot open seeds file: " + seeds_path);
        double x1, x2;
        while (in >> x1 >> x2) seeds.push_back({x1, x2});
        if (seeds.empty()) throw ConfigError("seeds file is empty");
    }

    SimState s0 = preflow_init(cfg.init, cfg.grid);
    s0.delta = cfg.delta;

    SnapshotSeries series;
    SimulateSinks sinks;
    sinks.record_every = 0;
    sinks.snapshot_every = cfg.traj_snapshot_every;
    sinks.on_snapshot = [&](const SimState& s) { series.states.push_back(s); };
    DiagSettings diag;
    diag.mu = cfg.stepper.mu;
    diag.full = false;
    (void)simulate(s0, cfg.horizon, cfg.stepper, sinks, diag);

    AdvectOptions opts;
    opts.dt_traj = cfg.traj_dt;
    opts.output_every = cfg.traj_output_every;
    TrajectoryBundle bundle = advect(seeds, series, opts);

    const std::string text = trajectory_to_ndjson(bundle);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        out << text;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D incompressible viscoelastic pseudo-spectral lab"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker-count hint (VISCO2D_THREADS fallback)");

    std::string config_path, resume_path, checkpoint_path, seeds_path, out_path;
    double mu = 1.0;

    auto* sim = app.add_subcommand("simulate", "march a configured run");
    sim->add_option("--config", config_path, "run configuration")->required();
    sim->add_option("--resume", resume_path, "checkpoint to resume from");

    auto* fam = app.add_subcommand("family", "run a delta = 1/n family and compare members");
    fam->add_option("--config", config_path, "run configuration")->required();

    auto* diag = app.add_subcommand("diagnose", "one-shot residual report for a checkpoint");
    diag->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    diag->add_option("--mu", mu, "viscosity used in derived diagnostics");

    auto* traj = app.add_subcommand("trajectories", "advect seeds through a configured run");
    traj->add_option("--config", config_path, "run configuration")->required();
    traj->add_option("--seeds", seeds_path, "text file with one 'x1 x2' pair per line")
        ->required();
    traj->add_option("--out", out_path, "output NDJSON path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (threads == 0) {
        if (const char* env = std::getenv("VISCO2D_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) set_thread_hint(threads);

    try {
        if (sim->parsed()) return run_simulate(config_path, resume_path);
        if (fam->parsed()) return run_family_cmd(config_path);
        if (diag->parsed()) return run_diagnose(checkpoint_path, mu);
        if (traj->parsed()) return run_trajectories(config_path, seeds_path, out_path);
    } catch (const BadArtifact& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const StepDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
