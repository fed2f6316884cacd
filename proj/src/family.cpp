#include "visco2d/family.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "visco2d/checkpoint.hpp"
#include "visco2d/errors.hpp"
#include "visco2d/ndjson.hpp"

namespace fs = std::filesystem;

namespace visco2d {

void FamilySpec::validate() const {
    grid.validate();
    stepper.validate();
    init.validate();
    if (delta_inverses.empty()) throw ConfigError("family needs at least one member");
    for (int n : delta_inverses)
        if (n < 1) throw ConfigError("delta inverse must be >= 1");
    if (!std::is_sorted(delta_inverses.begin(), delta_inverses.end()))
        throw ConfigError("delta inverses must be sorted increasing");
    if (delta_inverses.size() < 2)
        logging::warn("family has a single member; no comparisons will be produced");
    if (horizon <= 0.0) throw ConfigError("family horizon must be > 0");
    if (snapshot_every < 1) throw ConfigError("snapshot_every must be >= 1");
    const double snap_dt = stepper.dt * static_cast<double>(snapshot_every);
    for (double t : compare_times) {
        if (t <= 0.0 || t > horizon + 1e-12)
            throw ConfigError("compare time outside (0, horizon]");
        const double k = t / snap_dt;
        if (std::abs(k - std::llround(k)) > 1e-9)
            throw ConfigError("compare time " + std::to_string(t) +
                              " is not a multiple of the snapshot spacing");
    }
}

namespace {

std::string member_dir(const FamilySpec& spec, int delta_inverse) {
    return spec.workdir + "/member_" + std::to_string(delta_inverse);
}

std::string snap_path(const std::string& dir, long long index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "/snap_%06lld.ckpt", index);
    return dir + buf;
}

}  // namespace

SnapshotSeries load_member_series(const std::string& dir) {
    SnapshotSeries series;
    for (long long k = 0;; ++k) {
        const std::string path = snap_path(dir, k);
        if (!fs::exists(path)) break;
        series.states.push_back(read_checkpoint(path));
    }
    if (series.states.empty()) throw BadArtifact("no snapshots in member dir " + dir);
    return series;
}

double convexity_defect(const SnapshotSeries& member, const SnapshotSeries& reference,
                        double t_end) {
    if (member.states.size() != reference.states.size())
        throw IncompatibleRuns("snapshot counts differ");
    if (member.states.front().grid().n != reference.states.front().grid().n)
        throw IncompatibleRuns("grids differ");
    const double d = member.states.front().t - reference.states.front().t;
    if (std::abs(d) > 1e-12) throw IncompatibleRuns("time bases differ");
    const double spacing = member.spacing();
    if (std::abs(spacing - reference.spacing()) > 1e-12)
        throw IncompatibleRuns("snapshot cadences differ");

    auto pairing = [](const SimState& ref, const SimState& mem) {
        MatrixField grad_u = ops::vector_gradient(ref.u);
        MatrixField diff = ops::lin(1.0, ops::matmul_nt(mem.F, mem.F), -1.0,
                                    ops::matmul_nt(ref.F, ref.F));
        double acc = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) acc += inner(grad_u.comp(i, j), diff.comp(i, j));
        return acc;
    };

    double defect = 0.0;
    double prev = pairing(reference.states[0], member.states[0]);
    for (size_t k = 1; k < member.states.size(); ++k) {
        if (member.states[k].t > t_end + 1e-12) break;
        const double cur = pairing(reference.states[k], member.states[k]);
        defect += 0.5 * (prev + cur) * spacing;
        prev = cur;
    }
    return defect;
}

FamilyReport run_family(const FamilySpec& spec) {
    spec.validate();
    fs::create_directories(spec.workdir);

    SimState s0 = preflow_init(spec.init, spec.grid);
    const double u0_sq = s0.u.l2_sq();
    const double f0_sq = ops::matrix_minus_identity(s0.F).l2_sq();

    FamilyReport report;
    report.reference_delta_inverse = spec.delta_inverses.back();

    for (int dinv : spec.delta_inverses) {
        FamilyMember member;
        member.delta_inverse = dinv;
        member.delta = 1.0 / static_cast<double>(dinv);
        const std::string dir = member_dir(spec, dinv);
        fs::create_directories(dir);

        SimState s = s0;
        s.delta = member.delta;

        std::ofstream diag(dir + "/diag.ndjson", std::ios::trunc);
        long long snap_index = 0;
        DiagnosticsRecord last;
        SimulateSinks sinks;
        sinks.record_every = spec.snapshot_every;
        sinks.snapshot_every = spec.snapshot_every;
        sinks.on_record = [&](const DiagnosticsRecord& r) {
            last = r;
            diag << diagnostics_to_ndjson(r) << "\n";
            diag.flush();
        };
        sinks.on_snapshot = [&](const SimState& snap) {
            write_checkpoint(snap_path(dir, snap_index++), snap);
        };
        DiagSettings diag_settings;
        diag_settings.mu = spec.stepper.mu;
        diag_settings.full = false;

        try {
            (void)simulate(s, spec.horizon, spec.stepper, sinks, diag_settings);
            member.stress_balance_resid = std::abs(
                0.5 * last.f_minus_i_l2_sq - 0.5 * f0_sq - last.stress_pairing_integral);
            member.kinetic_balance_resid =
                std::abs(last.stress_pairing_integral + 0.5 * last.u_l2_sq - 0.5 * u0_sq +
                         last.dissipation_integral);
            member.energy_resid =
                std::abs(last.energy + last.dissipation_integral - 0.5 * (u0_sq + f0_sq));
        } catch (const StepDiverged& e) {
            member.failed = true;
            member.error = e.what();
        }
        report.members.push_back(member);
    }

    // Comparator works purely from the serialized snapshots.
    std::vector<int> survivors;
    for (const auto& m : report.members)
        if (!m.failed) survivors.push_back(m.delta_inverse);
    if (survivors.size() < 2) return report;

    const int ref = survivors.back();
    SnapshotSeries ref_series = load_member_series(member_dir(spec, ref));
    const double snap_dt = ref_series.spacing();

    for (size_t mi = 0; mi + 1 < survivors.size(); ++mi) {
        const int dinv = survivors[mi];
        SnapshotSeries series = load_member_series(member_dir(spec, dinv));
        for (double t : spec.compare_times) {
            const size_t idx = static_cast<size_t>(std::llround(t / snap_dt));
            if (idx >= series.states.size() || idx >= ref_series.states.size())
                throw IncompatibleRuns("compare time beyond stored snapshots");
            FamilyComparison c;
            c.t = t;
            c.delta_inverse = dinv;
            c.e_F = std::sqrt(
                ops::lin(1.0, series.states[idx].F, -1.0, ref_series.states[idx].F).l2_sq());
            c.e_u = std::sqrt(
                ops::lin(1.0, series.states[idx].u, -1.0, ref_series.states[idx].u).l2_sq());
            c.defect = convexity_defect(series, ref_series, t);
            report.comparisons.push_back(c);
        }
    }

    // Monotonicity verdicts.
    for (double t : spec.compare_times) {
        std::vector<double> e, d;
        for (const auto& c : report.comparisons)
            if (std::abs(c.t - t) < 1e-12) {
                e.push_back(c.e_F);
                d.push_back(std::abs(c.defect));
            }
        for (size_t i = 0; i + 1 < e.size(); ++i) {
            const bool last_gap = (i + 2 == e.size());
            const double slack = last_gap ? 1.05 : 1.0;
            if (!(e[i + 1] < e[i] * slack)) report.e_decreasing = false;
        }
        if (std::abs(t - spec.compare_times.back()) < 1e-12)
            for (size_t i = 0; i + 1 < d.size(); ++i)
                if (!(d[i + 1] <= d[i])) report.defect_decreasing = false;
    }
    return report;
}

std::string FamilyReport::to_ndjson() const {
    std::ostringstream out;
    for (const auto& m : members) {
        NdjsonLine line;
        line.field("schema", "family_member.v1");
        line.field("delta_inverse", static_cast<long long>(m.delta_inverse));
        line.field("delta", m.delta);
        line.field("status", m.failed ? "failed" : "ok");
        line.field("error", m.error);
        line.field("stress_balance_resid", m.stress_balance_resid);
        line.field("kinetic_balance_resid", m.kinetic_balance_resid);
        line.field("energy_resid", m.energy_resid);
        out << line.str() << "\n";
    }
    for (const auto& c : comparisons) {
        NdjsonLine line;
        line.field("schema", "family_compare.v1");
        line.field("t", c.t);
        line.field("delta_inverse", static_cast<long long>(c.delta_inverse));
        line.field("reference_delta_inverse", static_cast<long long>(reference_delta_inverse));
        line.field("e_F", c.e_F);
        line.field("e_u", c.e_u);
        line.field("defect", c.defect);
        out << line.str() << "\n";
    }
    {
        NdjsonLine line;
        line.field("schema", "family_verdict.v1");
        line.field("e_decreasing", e_decreasing);
        line.field("defect_decreasing", defect_decreasing);
        out << line.str() << "\n";
    }
    return out.str();
}

}  // namespace visco2d
