#pragma once

#include <cstdint>
#include <vector>

#include "visco2d/field.hpp"
#include "visco2d/operators.hpp"

namespace visco2d {

/// Simulation state (u, F, t) plus the regularization strength delta.
/// u is always produced through the Leray projector; F's constraints are
/// monitored, never enforced.
struct SimState {
    VectorField u;
    MatrixField F;
    double t = 0.0;
    double delta = 0.0;

    explicit SimState(const GridSpec& g) : u(g), F(identity_matrix(g)) {}
    const GridSpec& grid() const { return u.grid(); }
};

/// Pointwise sup-norm residuals of the transported constraints.
struct ConstraintResiduals {
    double div_u_inf = 0.0;
    /// max over i of ||d_j F_ji||_inf (column divergence).
    double div_ft_inf = 0.0;
    /// ||det F - 1||_inf.
    double det_drift_inf = 0.0;
    /// max over i of ||F_l1 d_l F_i2 - F_l2 d_l F_i1||_inf.
    double compat_inf = 0.0;
};

ConstraintResiduals constraint_residuals(const SimState& s);

double det_min(const MatrixField& F);

enum class PreflowKind { zero, sinsin, random_band };

const char* to_string(PreflowKind k);
PreflowKind preflow_kind_from_string(const std::string& s);

/// Recipe for constraint-respecting initial data near (0, I).
///
/// F0 is manufactured by evolving F from I under a prescribed smooth
/// divergence-free velocity for preflow_time (the deformation gradient of a
/// genuine volume-preserving flow), so det F0 = 1, div F0^T = 0 and the
/// gradient-compatibility identity hold up to integration error. u0 is an
/// independent random solenoidal field on the spectral band
/// kmin <= |k| <= kmax, scaled so ||u0||_L2 = amplitude.
struct InitialDataSpec {
    double amplitude = 0.0;
    std::uint64_t seed = 1;
    int kmin = 1;
    int kmax = 3;
    double preflow_time = 0.0;
    PreflowKind preflow_velocity = PreflowKind::sinsin;
    double preflow_amplitude = 0.0;
    double preflow_dt = 1e-3;
    /// When > 0, both amplitudes are rescaled by a common factor so the
    /// measured epsilon0 matches this target (fixed-point iteration).
    double epsilon0_target = 0.0;

    void validate() const;
};

/// The prescribed preflow velocity (scale multiplies preflow_amplitude).
VectorField preflow_velocity_field(const InitialDataSpec& spec, const GridSpec& grid,
                                   double scale = 1.0);

/// Deformation gradient of the flow of w after `time`, integrated from I with
/// classical RK4 at step `dt`.
MatrixField preflow_deform(const VectorField& w, double time, double dt);

/// Build the initial state. Throws InitRejected if ||F0 - I||_inf > 1/2.
SimState preflow_init(const InitialDataSpec& spec, const GridSpec& grid);

/// Size of the initial perturbation of (0, I):
///   ||F0 - I||_inf^2 + integral(|F0 - I|^2 + |u0|^2) dx.
/// Requires an initial state (t = 0).
double epsilon0(const SimState& s);

bool all_finite(const SimState& s);

/// Uniformly spaced stored states of one run (inputs to trajectory work,
/// weak-form quadrature and cross-run comparisons).
struct SnapshotSeries {
    std::vector<SimState> states;

    double t0() const { return states.front().t; }
    double t_end() const { return states.back().t; }
    /// Snapshot spacing; throws IncompleteHistory when non-uniform.
    double spacing() const;
};

}  // namespace visco2d
