#pragma once

#include <string>
#include <vector>

#include "visco2d/state.hpp"
#include "visco2d/stepper.hpp"

namespace visco2d {

/// A family of regularized runs delta = 1/n sharing grid, stepper and initial
/// data; the largest n (smallest delta) serves as the reference member.
struct FamilySpec {
    std::vector<int> delta_inverses;
    GridSpec grid;
    StepperConfig stepper;
    InitialDataSpec init;
    double horizon = 1.0;
    std::vector<double> compare_times;
    long long snapshot_every = 10;
    std::string workdir = "family_work";

    void validate() const;
};

struct FamilyMember {
    int delta_inverse = 0;
    double delta = 0.0;
    bool failed = false;
    std::string error;
    // discrete energy bookkeeping at the horizon, all from in-stepper
    // integrals: the F-pairing balance, the u-pairing balance and their sum
    // (the energy law).
    double stress_balance_resid = 0.0;   // |1/2||F-I||^2(T) - 1/2||F0-I||^2 - S|
    double kinetic_balance_resid = 0.0;  // |S + 1/2||u||^2(T) - 1/2||u0||^2 + W|
    double energy_resid = 0.0;
};

struct FamilyComparison {
    double t = 0.0;
    int delta_inverse = 0;
    double e_F = 0.0;     // ||F^n(t) - F^ref(t)||_L2
    double e_u = 0.0;
    double defect = 0.0;  // D(n) up to t (cross-member convexity pairing)
};

struct FamilyReport {
    std::vector<FamilyMember> members;
    std::vector<FamilyComparison> comparisons;
    int reference_delta_inverse = 0;
    /// e_F decreasing in n at every compare time (5% slack on the final gap).
    bool e_decreasing = true;
    /// |D(n)| decreasing in n at the final compare time.
    bool defect_decreasing = true;

    std::string to_ndjson() const;
};

/// Run every member sequentially, serializing snapshots to
/// workdir/member_<n>/, then compare from the serialized artifacts (never
/// in-memory). A diverged member is marked Failed and skipped by the
/// comparator.
FamilyReport run_family(const FamilySpec& spec);

/// Cross-member convexity defect up to t_end:
///   D = int_0^t <grad u_ref, F_m F_m^T - F_ref F_ref^T> ds
/// (trapezoid over common snapshots). Throws IncompatibleRuns when grids or
/// cadences differ.
double convexity_defect(const SnapshotSeries& member, const SnapshotSeries& reference,
                        double t_end);

/// Load the serialized snapshot series of one member directory.
SnapshotSeries load_member_series(const std::string& member_dir);

}  // namespace visco2d
