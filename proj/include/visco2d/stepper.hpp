#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "visco2d/diagnostics.hpp"
#include "visco2d/state.hpp"

namespace visco2d {

enum class Scheme { if_rk2, if_rk4 };

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Time-integration parameters. The stiff linear momentum terms
/// (-mu*lap + delta*lap^2) are handled by an exact per-mode exponential
/// integrating factor; dt is limited only by advection:
///   dt <= cfl_c / (max|u| * n).
struct StepperConfig {
    double dt = 1e-3;
    Scheme scheme = Scheme::if_rk4;
    double mu = 1.0;
    double cfl_c = 0.5;
    /// Test variants: freeze_F pins F to its initial value; drop_nonlinear
    /// removes the quadratic velocity advection from the momentum equation.
    bool freeze_F = false;
    bool drop_nonlinear = false;

    void validate() const;
};

/// Marching core. Holds the state spectrally between steps; converts to
/// SimState only when sampled. Also integrates, with the same Runge-Kutta
/// stages, the running work integrals that the energy bookkeeping needs:
///   dissipation     W(t) = int_0^t mu*||grad u||^2 + delta*||lap u||^2
///   stress pairing  S(t) = int_0^t <grad u, F F^T - I>
///   palinstrophy    W2(t) = int_0^t mu*||lap u||^2
struct WorkIntegrals {
    double dissipation = 0.0;
    double stress_pairing = 0.0;
    double palinstrophy = 0.0;
};

class Stepper {
  public:
    Stepper(const SimState& s0, const StepperConfig& cfg);

    /// Advance one dt. Throws CflExceeded or StepDiverged.
    void step();

    SimState state() const;
    double t() const;
    const WorkIntegrals& work() const;

    /// Reload the state from its real-space samples (the canonical form a
    /// checkpoint round-trip produces), so an uninterrupted run and a resumed
    /// run agree bit for bit.
    void canonicalize();

  private:
    struct Impl;
    std::shared_ptr<Impl> impl_;

    friend std::pair<VectorField, MatrixField> rhs(const SimState& s, const StepperConfig& cfg);
};

/// One step as a pure function (spec-level convenience).
SimState step(const SimState& s, const StepperConfig& cfg);

/// Full right-hand side (nonlinear terms plus viscous/hyperviscous terms,
/// pressure eliminated by the Leray projector):
///   du = P[-u.grad u + div(F F^T - I)] + mu*lap u - delta*lap^2 u
///   dF = -u.grad F + (grad u) F
std::pair<VectorField, MatrixField> rhs(const SimState& s, const StepperConfig& cfg);

struct SimulateSinks {
    long long record_every = 10;    // steps between diagnostics records
    long long checkpoint_every = 0; // 0 = no periodic checkpoints
    long long snapshot_every = 0;   // 0 = no in-memory snapshots
    std::function<void(const DiagnosticsRecord&)> on_record;
    std::function<void(const SimState&, long long step, bool is_final)> on_checkpoint;
    std::function<void(const SimState&)> on_snapshot;
};

/// March from s0 to absolute time T (a multiple of dt; s0.t must be too).
/// Emits a record at the start, at the cadence, and at the end. Deterministic
/// given (s0, cfg). On divergence writes the last good sampled state through
/// on_checkpoint and rethrows StepDiverged.
SimState simulate(const SimState& s0, double T, const StepperConfig& cfg,
                  const SimulateSinks& sinks, const DiagSettings& diag = {});

}  // namespace visco2d
