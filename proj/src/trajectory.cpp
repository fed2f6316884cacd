#include "visco2d/trajectory.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "visco2d/errors.hpp"
#include "visco2d/ndjson.hpp"

namespace visco2d {

namespace {

double wrap(double x) {
    x = std::fmod(x, kTwoPi);
    return x < 0.0 ? x + kTwoPi : x;
}

/// Velocity and velocity gradient of one snapshot at an off-grid point,
/// summed over the retained band.
struct PointVel {
    double u[2] = {0.0, 0.0};
    double gu[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
};

class BandEvaluator {
  public:
    explicit BandEvaluator(const SimState& s) : grid_(s.grid()) {
        cut_ = grid_.dealias == Dealias::two_thirds ? grid_.cutoff() : grid_.n / 2 - 1;
        const int w = 2 * cut_ + 1;
        uhat_[0].resize(size_t(w) * w);
        uhat_[1].resize(size_t(w) * w);
        for (int c = 0; c < 4; ++c) Fhat_[c].resize(size_t(w) * w);
        auto pack = [&](const ScalarField& f, std::vector<cplx>& dst) {
            auto sp = f.spectral();
            for (int k1 = -cut_; k1 <= cut_; ++k1)
                for (int k2 = -cut_; k2 <= cut_; ++k2) {
                    const int a = (k1 + grid_.n) % grid_.n;
                    const int b = (k2 + grid_.n) % grid_.n;
                    dst[size_t(k1 + cut_) * w + size_t(k2 + cut_)] =
                        sp[size_t(grid_.index(a, b))];
                }
        };
        pack(s.u.comp(0), uhat_[0]);
        pack(s.u.comp(1), uhat_[1]);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) pack(s.F.comp(i, j), Fhat_[2 * i + j]);
    }

    PointVel velocity(double x1, double x2) const {
        phases(x1, x2);
        PointVel out;
        const int w = 2 * cut_ + 1;
        for (int i1 = 0; i1 < w; ++i1) {
            const double k1 = i1 - cut_;
            const cplx e1c = e1_[size_t(i1)];
            for (int i2 = 0; i2 < w; ++i2) {
                const double k2 = i2 - cut_;
                const cplx e = e1c * e2_[size_t(i2)];
                for (int i = 0; i < 2; ++i) {
                    const cplx v = uhat_[i][size_t(i1) * w + size_t(i2)] * e;
                    out.u[i] += v.real();
                    out.gu[i][0] -= k1 * v.imag();
                    out.gu[i][1] -= k2 * v.imag();
                }
            }
        }
        const double n2 = double(grid_.n) * grid_.n;
        for (int i = 0; i < 2; ++i) {
            out.u[i] /= n2;
            out.gu[i][0] /= n2;
            out.gu[i][1] /= n2;
        }
        return out;
    }

    /// F at a point (for Gf sampling at output times).
    std::array<double, 4> deformation(double x1, double x2) const {
        phases(x1, x2);
        std::array<double, 4> out{0.0, 0.0, 0.0, 0.0};
        const int w = 2 * cut_ + 1;
        for (int i1 = 0; i1 < w; ++i1) {
            const cplx e1c = e1_[size_t(i1)];
            for (int i2 = 0; i2 < w; ++i2) {
                const cplx e = e1c * e2_[size_t(i2)];
                for (int c = 0; c < 4; ++c)
                    out[size_t(c)] += (Fhat_[c][size_t(i1) * w + size_t(i2)] * e).real();
            }
        }
        const double n2 = double(grid_.n) * grid_.n;
        for (auto& v : out) v /= n2;
        return out;
    }

  private:
    void phases(double x1, double x2) const {
        const int w = 2 * cut_ + 1;
        e1_.resize(size_t(w));
        e2_.resize(size_t(w));
        for (int k = -cut_; k <= cut_; ++k) {
            e1_[size_t(k + cut_)] = std::polar(1.0, k * x1);
            e2_[size_t(k + cut_)] = std::polar(1.0, k * x2);
        }
    }

    GridSpec grid_;
    int cut_;
    std::vector<cplx> uhat_[2], Fhat_[4];
    mutable std::vector<cplx> e1_, e2_;
};

struct Particle {
    double x1, x2;
    std::array<double, 4> F;
};

PointVel eval_at_time(const std::vector<BandEvaluator>& evals, const SnapshotSeries& run,
                      double t, double x1, double x2) {
    const double d = run.spacing();
    const double pos = (t - run.t0()) / d;
    const long long nearest = std::llround(pos);
    if (nearest >= 0 && size_t(nearest) < evals.size() && std::abs(pos - nearest) < 1e-9)
        return evals[size_t(nearest)].velocity(x1, x2);

    // cubic Lagrange interpolation in time over four bracketing snapshots
    long long i0 = static_cast<long long>(std::floor(pos)) - 1;
    i0 = std::max<long long>(0, std::min<long long>(i0, static_cast<long long>(evals.size()) - 4));
    if (evals.size() < 4) throw CadenceTooCoarse("need at least 4 snapshots for interpolation");
    PointVel acc;
    for (int m = 0; m < 4; ++m) {
        double w = 1.0;
        for (int l = 0; l < 4; ++l)
            if (l != m) w *= (pos - double(i0 + l)) / double(m - l);
        const PointVel pv = evals[size_t(i0 + m)].velocity(x1, x2);
        for (int i = 0; i < 2; ++i) {
            acc.u[i] += w * pv.u[i];
            for (int j = 0; j < 2; ++j) acc.gu[i][j] += w * pv.gu[i][j];
        }
    }
    return acc;
}

}  // namespace

double TrajectoryBundle::min_det_F_path() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& path : samples)
        for (const auto& s : path)
            m = std::min(m, s.F_path[0] * s.F_path[3] - s.F_path[1] * s.F_path[2]);
    return m;
}

TrajectoryBundle advect(const std::vector<Vec2>& seeds, const SnapshotSeries& run,
                        const AdvectOptions& opts) {
    if (run.states.size() < 2) throw CadenceTooCoarse("run must contain at least two snapshots");
    const double d = run.spacing();
    const double h = opts.dt_traj;
    if (h <= 0.0) throw ConfigError("trajectory dt must be > 0");
    if (d > h + 1e-12)
        throw CadenceTooCoarse("snapshot spacing " + std::to_string(d) +
                               " coarser than trajectory step " + std::to_string(h));
    const double T = run.t_end() - run.t0();
    const long long steps = std::llround(T / h);
    if (std::abs(steps * h - T) > 1e-9)
        throw CadenceTooCoarse("trajectory step does not tile the run horizon");

    std::vector<BandEvaluator> evals;
    evals.reserve(run.states.size());
    for (const auto& s : run.states) evals.emplace_back(s);

    TrajectoryBundle out;
    out.seeds = seeds;
    out.dt_out = h * opts.output_every;
    out.samples.assign(seeds.size(), {});

    std::vector<Particle> ps(seeds.size());
    for (size_t i = 0; i < seeds.size(); ++i)
        ps[i] = {wrap(seeds[i].x1), wrap(seeds[i].x2), {1.0, 0.0, 0.0, 1.0}};

    // F_path(0) = F(X, 0) from the Eulerian initial field.
    for (size_t i = 0; i < seeds.size(); ++i)
        ps[i].F = evals.front().deformation(ps[i].x1, ps[i].x2);

    auto emit = [&](long long step) {
        const double t = run.t0() + step * h;
        const size_t snap = size_t(std::llround(step * h / d));
        for (size_t i = 0; i < seeds.size(); ++i) {
            TrajectorySample s;
            s.t = t;
            s.x = {ps[i].x1, ps[i].x2};
            s.F_path = ps[i].F;
            const PointVel pv = evals[snap].velocity(ps[i].x1, ps[i].x2);
            const auto Fe = evals[snap].deformation(ps[i].x1, ps[i].x2);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    s.Gf[size_t(2 * r + c)] = pv.gu[r][c] + Fe[size_t(2 * r + c)] -
                                              (r == c ? 1.0 : 0.0);
            out.samples[i].push_back(s);
        }
    };
    emit(0);

    struct Slope {
        double dx1, dx2;
        std::array<double, 4> dF;
    };
    auto slope = [&](const Particle& p, double t) {
        const PointVel pv = eval_at_time(evals, run, t, p.x1, p.x2);
        Slope s;
        s.dx1 = pv.u[0];
        s.dx2 = pv.u[1];
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                s.dF[size_t(2 * i + j)] =
                    pv.gu[i][0] * p.F[size_t(0 + j)] + pv.gu[i][1] * p.F[size_t(2 + j)];
        return s;
    };

    for (long long k = 0; k < steps; ++k) {
        const double t = run.t0() + k * h;
        for (auto& p : ps) {
            const Slope k1 = slope(p, t);
            Particle p2{p.x1 + 0.5 * h * k1.dx1, p.x2 + 0.5 * h * k1.dx2, p.F};
            for (int c = 0; c < 4; ++c) p2.F[size_t(c)] += 0.5 * h * k1.dF[size_t(c)];
            const Slope k2 = slope(p2, t + 0.5 * h);
            Particle p3{p.x1 + 0.5 * h * k2.dx1, p.x2 + 0.5 * h * k2.dx2, p.F};
            for (int c = 0; c < 4; ++c) p3.F[size_t(c)] += 0.5 * h * k2.dF[size_t(c)];
            const Slope k3 = slope(p3, t + 0.5 * h);
            Particle p4{p.x1 + h * k3.dx1, p.x2 + h * k3.dx2, p.F};
            for (int c = 0; c < 4; ++c) p4.F[size_t(c)] += h * k3.dF[size_t(c)];
            const Slope k4 = slope(p4, t + h);

            p.x1 = wrap(p.x1 + h / 6.0 * (k1.dx1 + 2.0 * (k2.dx1 + k3.dx1) + k4.dx1));
            p.x2 = wrap(p.x2 + h / 6.0 * (k1.dx2 + 2.0 * (k2.dx2 + k3.dx2) + k4.dx2));
            for (int c = 0; c < 4; ++c)
                p.F[size_t(c)] += h / 6.0 *
                                  (k1.dF[size_t(c)] + 2.0 * (k2.dF[size_t(c)] + k3.dF[size_t(c)]) +
                                   k4.dF[size_t(c)]);
        }
        if ((k + 1) % opts.output_every == 0) emit(k + 1);
    }
    return out;
}

SnapshotSeries reversed(const SnapshotSeries& run) {
    SnapshotSeries rev;
    const double T = run.t_end();
    rev.states.reserve(run.states.size());
    for (auto it = run.states.rbegin(); it != run.states.rend(); ++it) {
        SimState s = *it;
        s.u = ops::scaled(-1.0, s.u);
        s.t = T - s.t;
        rev.states.push_back(std::move(s));
    }
    return rev;
}

PathwiseReport pathwise_identity_check(const TrajectoryBundle& bundle, double fd_tol) {
    PathwiseReport rep;
    rep.explicit_M = 64.0 * std::pow(std::sqrt(2.0) + 0.5, 4.0);
    rep.min_chain_margin = std::numeric_limits<double>::infinity();
    rep.min_absorbed_margin = std::numeric_limits<double>::infinity();
    rep.observed_M = 0.0;

    auto fro = [](const std::array<double, 4>& m) {
        return std::sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2] + m[3] * m[3]);
    };

    // Prerequisite first: the absorbed inequality is only claimed under
    // ||F - I|| <= 1/2 along paths.
    for (const auto& path : bundle.samples)
        for (const auto& s : path) {
            const std::array<double, 4> e{s.F_path[0] - 1.0, s.F_path[1], s.F_path[2],
                                          s.F_path[3] - 1.0};
            rep.max_f_minus_i = std::max(rep.max_f_minus_i, fro(e));
            rep.min_det =
                std::min(rep.min_det, s.F_path[0] * s.F_path[3] - s.F_path[1] * s.F_path[2]);
        }
    if (rep.max_f_minus_i > 0.5)
        throw PrerequisiteViolated("||F_path - I|| exceeds 1/2 along a trajectory: " +
                                   std::to_string(rep.max_f_minus_i));

    const double dt = bundle.dt_out;
    for (const auto& path : bundle.samples) {
        for (size_t k = 1; k + 1 < path.size(); ++k) {
            const auto& sm = path[k - 1];
            const auto& s0 = path[k];
            const auto& sp = path[k + 1];
            std::array<double, 4> e{s0.F_path[0] - 1.0, s0.F_path[1], s0.F_path[2],
                                    s0.F_path[3] - 1.0};
            // d/dt (F - I) + (F - I) - Gf F + (F - I)(F - I)
            std::array<double, 4> resid;
            for (int c = 0; c < 4; ++c)
                resid[size_t(c)] =
                    (sp.F_path[size_t(c)] - sm.F_path[size_t(c)]) / (2.0 * dt) + e[size_t(c)];
            auto mat_mul = [](const std::array<double, 4>& a, const std::array<double, 4>& b) {
                return std::array<double, 4>{a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
                                             a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
            };
            const auto gf_F = mat_mul(s0.Gf, s0.F_path);
            const auto ee = mat_mul(e, e);
            for (int c = 0; c < 4; ++c) resid[size_t(c)] += ee[size_t(c)] - gf_F[size_t(c)];
            rep.max_identity_resid = std::max(rep.max_identity_resid, fro(resid));

            // differential inequality for q = |F - I|^4
            auto qof = [&](const TrajectorySample& s) {
                const std::array<double, 4> d{s.F_path[0] - 1.0, s.F_path[1], s.F_path[2],
                                              s.F_path[3] - 1.0};
                const double f = fro(d);
                return f * f * f * f;
            };
            const double q = qof(s0);
            const double dq = (qof(sp) - qof(sm)) / (2.0 * dt);
            const double fe = fro(e);
            const double gf = fro(s0.Gf);
            const double fF = fro(s0.F_path);
            const double chain_rhs = 4.0 * gf * fF * fe * fe * fe + 4.0 * fe * fe * fe * fe * fe;
            rep.min_chain_margin = std::min(rep.min_chain_margin, chain_rhs + fd_tol -
                                                                      (dq + 4.0 * q));
            const double gf4 = gf * gf * gf * gf;
            rep.min_absorbed_margin =
                std::min(rep.min_absorbed_margin, rep.explicit_M * gf4 + fd_tol - (dq + q));
            if (gf4 > 1e-30) rep.observed_M = std::max(rep.observed_M, (dq + q) / gf4);
            ++rep.samples_checked;
        }
    }
    if (rep.samples_checked == 0) {
        rep.min_chain_margin = 0.0;
        rep.min_absorbed_margin = 0.0;
    }
    return rep;
}

std::string trajectory_to_ndjson(const TrajectoryBundle& bundle) {
    std::ostringstream out;
    for (size_t i = 0; i < bundle.samples.size(); ++i) {
        for (const auto& s : bundle.samples[i]) {
            NdjsonLine line;
            line.field("schema", "trajectory.v1");
            line.field("seed", static_cast<long long>(i));
            line.field("t", s.t);
            line.field("x1", s.x.x1);
            line.field("x2", s.x.x2);
            line.field("F11", s.F_path[0]);
            line.field("F12", s.F_path[1]);
            line.field("F21", s.F_path[2]);
            line.field("F22", s.F_path[3]);
            line.field("Gf11", s.Gf[0]);
            line.field("Gf12", s.Gf[1]);
            line.field("Gf21", s.Gf[2]);
            line.field("Gf22", s.Gf[3]);
            line.field("det_F_path", s.F_path[0] * s.F_path[3] - s.F_path[1] * s.F_path[2]);
            out << line.str() << "\n";
        }
    }
    return out.str();
}

}  // namespace visco2d
