#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "visco2d/checkpoint.hpp"
#include "visco2d/operators.hpp"
#include "visco2d/config.hpp"
#include "visco2d/errors.hpp"
#include "visco2d/ndjson.hpp"

using namespace visco2d;
namespace fs = std::filesystem;

#ifndef VISCO2D_CLI_PATH
#error "VISCO2D_CLI_PATH must be defined by the build"
#endif

namespace {

const char* kCli = VISCO2D_CLI_PATH;

int run_cli(const std::string& args) {
    const std::string cmd = std::string(kCli) + " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct DirGuard {
    std::vector<std::string> paths;
    ~DirGuard() {
        for (const auto& p : paths) fs::remove_all(p);
        fs::remove("cli_stdout.txt");
        fs::remove("cli_stderr.txt");
    }
};

RunConfig small_config(const std::string& outdir) {
    RunConfig cfg;
    cfg.grid.n = 64;
    cfg.stepper.dt = 2e-3;
    cfg.delta = 1.0 / 16.0;
    cfg.init.amplitude = 0.1;
    cfg.init.seed = 42;
    cfg.init.kmax = 3;
    cfg.init.preflow_time = 0.1;
    cfg.init.preflow_amplitude = 0.3;
    cfg.init.preflow_dt = 1e-3;
    cfg.horizon = 0.1;
    cfg.cadence = 10;
    cfg.directory = outdir;
    cfg.holder_m = 16;
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
}

}  // namespace

TEST_CASE("config round-trips through serialization") {
    RunConfig cfg = small_config("roundtrip_out");
    cfg.family_delta_inverses = {4, 8, 16};
    cfg.family_compare_times = {0.5, 1.0};
    cfg.format_csv = true;
    const std::string text = serialize_config(cfg);
    RunConfig back = parse_config(text);
    CHECK(back == cfg);
    CHECK(serialize_config(back) == text);
}

TEST_CASE("config parser rejects malformed inputs") {
    CHECK_THROWS_AS((void)parse_config("unknown.key = 1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("grid.n = twelve\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("grid.n\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("grid.n = 64\ngrid.n = 128\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("grid.n = 63\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("output.formats = parquet\n"), ConfigError);
    // comments and blank lines are fine
    RunConfig ok = parse_config("# comment\n\ngrid.n = 64 # trailing\n");
    CHECK(ok.grid.n == 64);
}

TEST_CASE("floats round-trip at 17 significant digits") {
    RunConfig cfg;
    cfg.stepper.dt = 0.1 + 1e-17;
    cfg.horizon = kTwoPi;
    cfg.init.preflow_amplitude = 1.0 / 3.0;
    RunConfig back = parse_config(serialize_config(cfg));
    CHECK(back.stepper.dt == cfg.stepper.dt);
    CHECK(back.horizon == cfg.horizon);
    CHECK(back.init.preflow_amplitude == cfg.init.preflow_amplitude);
}

TEST_CASE("cli: malformed config exits 1 and writes nothing") {
    DirGuard guard;
    guard.paths = {"cli_bad_out"};
    write_text("bad_config.cfg", "grid.n = sixty\n");
    guard.paths.push_back("bad_config.cfg");
    const int rc = run_cli("simulate --config bad_config.cfg");
    CHECK(rc == 1);
    CHECK(!fs::exists("cli_bad_out"));
}

TEST_CASE("cli: T = 0 run emits one record and a final checkpoint") {
    DirGuard guard;
    guard.paths = {"cli_t0_out", "t0.cfg"};
    RunConfig cfg = small_config("cli_t0_out");
    cfg.horizon = 0.0;
    write_text("t0.cfg", serialize_config(cfg));
    const int rc = run_cli("simulate --config t0.cfg");
    CHECK(rc == 0);
    const std::string diag = slurp("cli_t0_out/diag.ndjson");
    CHECK(std::count(diag.begin(), diag.end(), '\n') == 1);
    CHECK(fs::exists("cli_t0_out/final.ckpt"));
    DiagnosticsRecord rec = diagnostics_from_ndjson(diag.substr(0, diag.find('\n')));
    CHECK(rec.t == 0.0);
}

TEST_CASE("cli: resumed run reproduces the uninterrupted run bit for bit") {
    DirGuard guard;
    guard.paths = {"cli_full_out", "cli_half_out", "full.cfg", "half.cfg"};

    RunConfig full = small_config("cli_full_out");
    full.checkpoint_every = 25;  // mid-run checkpoint at step 25 (t = 0.05)
    write_text("full.cfg", serialize_config(full));
    REQUIRE(run_cli("simulate --config full.cfg") == 0);

    RunConfig half = full;
    half.directory = "cli_half_out";
    write_text("half.cfg", serialize_config(half));
    REQUIRE(run_cli("simulate --config half.cfg --resume cli_full_out/ckpt_000000025.bin") == 0);

    const std::string a = slurp("cli_full_out/final.ckpt");
    const std::string b = slurp("cli_half_out/final.ckpt");
    REQUIRE(!a.empty());
    CHECK(a == b);
}

TEST_CASE("cli: csv and ndjson outputs share the column set") {
    DirGuard guard;
    guard.paths = {"cli_fmt_out", "fmt.cfg"};
    RunConfig cfg = small_config("cli_fmt_out");
    cfg.format_csv = true;
    cfg.horizon = 0.02;
    write_text("fmt.cfg", serialize_config(cfg));
    REQUIRE(run_cli("simulate --config fmt.cfg") == 0);
    std::ifstream csv("cli_fmt_out/diag.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == diagnostics_csv_header());
    std::string row;
    std::getline(csv, row);
    CHECK(std::count(row.begin(), row.end(), ',') ==
          std::count(header.begin(), header.end(), ','));
}

TEST_CASE("cli: diagnose on an equilibrium checkpoint reports zero residuals") {
    DirGuard guard;
    guard.paths = {"eq.ckpt"};
    GridSpec g{64, Dealias::two_thirds};
    SimState eq(g);
    write_checkpoint("eq.ckpt", eq);
    REQUIRE(run_cli("diagnose --checkpoint eq.ckpt") == 0);
    const std::string out = slurp("cli_stdout.txt");
    DiagnosticsRecord rec = diagnostics_from_ndjson(out.substr(0, out.find('\n')));
    CHECK(rec.div_u_inf == 0.0);
    CHECK(rec.det_drift_inf == 0.0);
    CHECK(rec.compat_inf == 0.0);
    CHECK(rec.flux_identity_rel == 0.0);
}

TEST_CASE("cli: diagnose rejects bad magic and non-finite data with exit 3") {
    DirGuard guard;
    guard.paths = {"bad.ckpt", "nan.ckpt"};
    write_text("bad.ckpt", "XXXX not a checkpoint");
    CHECK(run_cli("diagnose --checkpoint bad.ckpt") == 3);

    GridSpec g{64, Dealias::two_thirds};
    SimState s(g);
    s.u.comp(0).mutable_real()[7] = std::numeric_limits<double>::quiet_NaN();
    write_checkpoint("nan.ckpt", s);
    CHECK(run_cli("diagnose --checkpoint nan.ckpt") == 3);
}

TEST_CASE("cli: family with a single member warns and emits no comparisons") {
    DirGuard guard;
    guard.paths = {"cli_family_single", "family1.cfg"};
    RunConfig cfg = small_config("cli_family_single");
    cfg.family_delta_inverses = {8};
    cfg.family_compare_times = {0.1};
    cfg.family_snapshot_every = 10;
    write_text("family1.cfg", serialize_config(cfg));
    REQUIRE(run_cli("family --config family1.cfg") == 0);
    const std::string report = slurp("cli_family_single/family_report.ndjson");
    CHECK(report.find("family_member.v1") != std::string::npos);
    CHECK(report.find("family_compare.v1") == std::string::npos);
    const std::string err = slurp("cli_stderr.txt");
    CHECK(err.find("single member") != std::string::npos);
}

TEST_CASE("cli: trajectories of corner seeds on the equilibrium are constant") {
    DirGuard guard;
    guard.paths = {"traj.cfg", "seeds.txt", "traj_out.ndjson"};
    RunConfig cfg = small_config("unused_dir");
    cfg.init.amplitude = 0.0;
    cfg.init.preflow_time = 0.0;
    cfg.horizon = 0.05;
    cfg.traj_dt = 0.01;
    cfg.traj_snapshot_every = 5;
    write_text("traj.cfg", serialize_config(cfg));
    write_text("seeds.txt", "0 0\n0 6.28\n6.28 0\n6.28 6.28\n");
    REQUIRE(run_cli("trajectories --config traj.cfg --seeds seeds.txt --out traj_out.ndjson") ==
            0);
    std::ifstream in("traj_out.ndjson");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        const double x1 = j.at("x1").get<double>();
        const long long seed = j.at("seed").get<long long>();
        if (seed == 0) CHECK(x1 == 0.0);
        CHECK(j.at("det_F_path").get<double>() == 1.0);
        ++lines;
    }
    CHECK(lines > 0);
    guard.paths.push_back("unused_dir");
}

TEST_CASE("cli: thread hint does not change results") {
    DirGuard guard;
    guard.paths = {"threads.ckpt"};
    GridSpec g{64, Dealias::two_thirds};
    SimState s(g);
    s.u.comp(0).fill_from([](double x1, double x2) { return 0.1 * std::sin(x1 + 2 * x2); });
    s.u.comp(1).fill_from([](double x1, double) { return 0.05 * std::cos(x1); });
    s.u = ops::leray_project(s.u);
    write_checkpoint("threads.ckpt", s);
    REQUIRE(run_cli("--threads 1 diagnose --checkpoint threads.ckpt") == 0);
    const std::string one = slurp("cli_stdout.txt");
    REQUIRE(run_cli("--threads 4 diagnose --checkpoint threads.ckpt") == 0);
    const std::string four = slurp("cli_stdout.txt");
    CHECK(one == four);
    CHECK(!one.empty());
}

TEST_CASE("checkpoint header layout is pinned") {
    DirGuard guard;
    guard.paths = {"layout.ckpt"};
    GridSpec g{64, Dealias::two_thirds};
    SimState s(g);
    s.t = 1.5;
    s.delta = 0.25;
    write_checkpoint("layout.ckpt", s);
    const std::string bytes = slurp("layout.ckpt");
    REQUIRE(bytes.size() == 4 + 4 + 4 + 8 + 8 + 6ull * 64 * 64 * 8);
    CHECK(bytes.substr(0, 4) == "VD2D");
    // version 1, little endian
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    // n = 64
    CHECK(static_cast<unsigned char>(bytes[8]) == 64);
}
