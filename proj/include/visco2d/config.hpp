#pragma once

#include <string>
#include <vector>

#include "visco2d/family.hpp"
#include "visco2d/runtime.hpp"
#include "visco2d/state.hpp"
#include "visco2d/stepper.hpp"

namespace visco2d {

/// Complete run configuration. Serialized as a flat, typed key = value text
/// format (one key per line, '#' comments); unknown or duplicate keys are
/// rejected and floating-point values round-trip exactly (17 significant
/// digits).
struct RunConfig {
    GridSpec grid;
    StepperConfig stepper;
    double delta = 0.0;
    InitialDataSpec init;
    double horizon = 1.0;

    // output
    long long cadence = 10;
    std::string directory = "out";
    bool format_ndjson = true;
    bool format_csv = false;
    long long checkpoint_every = 0;
    int holder_m = 64;
    double holder_alpha = 0.5;

    // family extras
    std::vector<int> family_delta_inverses;
    std::vector<double> family_compare_times;
    long long family_snapshot_every = 10;

    // trajectory extras
    double traj_dt = 1e-2;
    long long traj_snapshot_every = 1;
    int traj_output_every = 1;

    void validate() const;
    FamilySpec family_spec() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace visco2d
