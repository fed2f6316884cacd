#pragma once

#include <functional>
#include <string>
#include <vector>

#include "visco2d/state.hpp"

namespace visco2d {

/// sigma(t) = min{1, t}: suppresses the initial layer in the weighted norms.
inline double sigma_weight(double t) { return t < 1.0 ? (t < 0.0 ? 0.0 : t) : 1.0; }

/// Effective viscous flux and companions, all derived from spatial data only
/// (no time differencing):
///   flux          G  = grad u - (-lap)^-1 grad P div(F F^T - I)
///   flux_variant  Gf = grad u + F - I
///   proj_accel    P udot = mu lap u - delta lap^2 u + P div(F F^T - I)
///   accel         udot   = P udot + Q(u . grad u)
struct FluxFields {
    MatrixField flux;
    MatrixField flux_variant;
    VectorField proj_accel;
    VectorField accel;

    /// || lap G - grad P udot - delta grad lap^2 u - (1-mu) grad lap u || /
    /// || grad P udot ||; exactly zero in exact arithmetic, 0 when both sides
    /// vanish.
    double identity_rel_resid = 0.0;
    /// || Q div(F - I) || / || div(F - I) || (vanishes with div F^T).
    double pdiv_rel_resid = 0.0;

    explicit FluxFields(const GridSpec& g)
        : flux(g), flux_variant(g), proj_accel(g), accel(g) {}
};

std::pair<VectorField, VectorField> material_derivative(const SimState& s, double mu = 1.0);
FluxFields effective_flux(const SimState& s, double mu = 1.0);

/// Residual of the flux decomposition
///   lap Gf = lap G - grad P div((F-I)(F-I)^T) - curl_curl(F - I),
/// relative to ||lap Gf|| (exact when div F^T = 0).
double flux_decomposition_residual(const SimState& s, double mu = 1.0);

/// Running totals carried by the simulate loop into each record.
struct RunningStats {
    double epsilon0 = 0.0;
    double b_running = 0.0;  // running max of ||F - I||_inf^2
    double dissipation_integral = 0.0;
    double stress_pairing_integral = 0.0;
    double palinstrophy_integral = 0.0;
};

struct DiagSettings {
    double mu = 1.0;
    int holder_m = 64;
    double holder_alpha = 0.5;
    /// Skip the flux/Holder block (cheap records for huge runs).
    bool full = true;
};

/// One flat record per sampled instant; serialized as NDJSON/CSV.
struct DiagnosticsRecord {
    double t = 0.0;
    double sigma = 0.0;
    // energy block
    double u_l2_sq = 0.0, f_minus_i_l2_sq = 0.0, grad_u_l2_sq = 0.0, delta_lap_u_l2_sq = 0.0;
    double energy = 0.0;
    double dissipation_integral = 0.0;
    double stress_pairing_integral = 0.0;
    double enstrophy = 0.0;
    double palinstrophy_integral = 0.0;
    // weighted A-functional integrands
    double sigma_grad_u_l2_sq = 0.0, sigma2_pudot_l2_sq = 0.0;
    double sigma_udot_l2_sq = 0.0, sigma2_grad_pudot_l2_sq = 0.0;
    double pudot_l2_sq = 0.0, udot_l2_sq = 0.0, grad_pudot_l2_sq = 0.0;
    double sup_integrand = 0.0;
    // B functional
    double f_minus_i_linf = 0.0, f_minus_i_linf_sq = 0.0, b_running = 0.0;
    // constraint residuals
    double div_u_inf = 0.0, div_ft_inf = 0.0, det_drift_inf = 0.0, compat_inf = 0.0;
    double det_min = 1.0;
    // L4 functionals
    double u_l4_4 = 0.0, u2_gradu2 = 0.0;
    // Holder pair
    double holder_alpha = 0.5, holder_seminorm = 0.0, holder_bound = 0.0;
    // flux norms
    double g_l2 = 0.0, grad_g_l2 = 0.0, gf_l2 = 0.0, grad_gf_l2 = 0.0, lap_gf_l2 = 0.0;
    // identity residuals (relative)
    double flux_identity_rel = 0.0, flux_decomp_rel = 0.0, pdiv_fmi_rel = 0.0;
};

DiagnosticsRecord evaluate_diagnostics(const SimState& s, const RunningStats& stats,
                                       const DiagSettings& settings);

/// Fixed column order shared by the NDJSON and CSV emitters.
const std::vector<std::pair<std::string, double DiagnosticsRecord::*>>& diagnostics_columns();

// --- functionals over a stored history ------------------------------------

struct FunctionalA {
    double value = 0.0;
    double sup_part = 0.0;
    double integral_part = 0.0;
};

/// A(T): sup over records of the weighted pointwise part plus the trapezoid
/// time integral of the weighted dissipation part. The sigma kink at t = 1 is
/// handled by splitting the straddling interval. Throws IncompleteHistory on
/// gaps or when the history does not cover [0, T].
FunctionalA functional_A(const std::vector<DiagnosticsRecord>& history, double T);

/// B(T): running max of ||F - I||_inf^2 over [0, T].
double functional_B(const std::vector<DiagnosticsRecord>& history, double T);

// --- inequality reports (constants measured, never asserted) ---------------

struct FluxBoundReport {
    bool both_zero = false;
    double lhs_sq = 0.0;       // ||lap Gf||^2 + ||curlcurl(F-I)||^2 + ||grad P div EE^T||^2
    double rhs_sq = 0.0;       // ||grad P udot||^2
    double ratio = 0.0;        // lhs_sq / rhs_sq
    double grad_variant_sq = 0.0;
    double pudot_sq = 0.0;
    double ratio_dimensional = 0.0;  // ||grad Gf||^2 / ||P udot||^2
    double ratio_as_written = 0.0;   // ||grad Gf||   / ||P udot||^2
    double delta_correction_rel = 0.0;
};

FluxBoundReport flux_h1_bound_check(const SimState& s, double mu = 1.0);

struct L4Report {
    double sup_u_l4_4 = 0.0;
    double mixed_integral = 0.0;  // int int |u|^2 |grad u|^2
    double lhs = 0.0;
    double rhs_u0_l4_4 = 0.0;
    double rhs_eps0_b = 0.0;
    double ratio = 0.0;  // lhs / max(rhs pieces sum, tiny)
};

L4Report l4_energy_check(const std::vector<DiagnosticsRecord>& history, double T,
                         double epsilon0);

/// Lower-bound estimate of the alpha-Holder seminorm of u: max over pairs of
/// an m x m sublattice within periodic distance pi. Requires alpha in
/// (0.1, 0.9).
double holder_seminorm(const VectorField& u, double alpha, int m = 64);

struct HolderReport {
    double seminorm = 0.0;
    double bound = 0.0;  // interpolation-type right side with constant 1
    double ratio = 0.0;
    double alpha = 0.5;
};

HolderReport holder_bound_check(const SimState& s, double alpha, double epsilon0,
                                double b_running, double mu = 1.0, int m = 64);

// --- weak formulations ------------------------------------------------------

/// Space-time test function: closed-form low-mode space profile times a
/// smooth bump in time supported inside (0, T).
struct TestFunction {
    /// component i at (x1, x2); time factor handled separately
    std::function<double(int i, double x1, double x2)> comp;
    std::function<double(int i, int j, double x1, double x2)> grad;  // d_j comp_i
    std::function<double(int i, double x1, double x2)> lap;
    std::function<double(double t)> bump;
    std::function<double(double t)> bump_dt;
    bool solenoidal = false;
    std::string name;
};

/// psi = perp-grad of cos(k.x + phase) (divergence-free), bump on
/// [0.1 T, 0.9 T].
TestFunction solenoidal_test_function(int k1, int k2, double phase, double T,
                                      const std::string& name);
/// beta with independent trig components (not solenoidal).
TestFunction generic_test_function(int k1, int k2, double phase, double T,
                                   const std::string& name);

/// Momentum weak-form residual over a stored run (trapezoid in time, exact
/// grid quadrature in space). For delta > 0 runs the biharmonic pairing
/// delta * int int lap u . lap psi is part of the tested formulation; at
/// delta = 0 this is the inviscid-limit form verbatim. Throws
/// InvalidTestFunction when psi is not divergence-free.
double weak_form_momentum_residual(const SnapshotSeries& run, const TestFunction& psi,
                                   double mu = 1.0);

/// Column transport weak-form residual for column j in {0, 1}.
double weak_form_transport_residual(const SnapshotSeries& run, int column_j,
                                    const TestFunction& beta);

/// Max over sampled interior times of the FF^T transport identity residual
///   d/dt(FF^T) + u.grad(FF^T) - (grad u) FF^T - FF^T (grad u)^T = 0
/// with the time derivative from centered differences (O(spacing^2)).
double ss_transport_identity_residual(const SnapshotSeries& run);

}  // namespace visco2d
