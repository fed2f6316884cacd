#include "visco2d/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "visco2d/errors.hpp"
#include "visco2d/ndjson.hpp"

namespace visco2d {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

long long parse_int(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const long long out = std::strtoll(v.c_str(), &end, 10);
    if (errno != 0 || end == v.c_str() || *end != '\0')
        throw ConfigError("bad integer for " + key + ": '" + v + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (errno != 0 || end == v.c_str() || *end != '\0')
        throw ConfigError("bad real for " + key + ": '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("bad bool for " + key + ": '" + v + "' (use true/false)");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) parts.push_back(cur);
    }
    return parts;
}

}  // namespace

void RunConfig::validate() const {
    grid.validate();
    stepper.validate();
    init.validate();
    if (delta < 0.0) throw ConfigError("physics.delta must be >= 0");
    if (horizon < 0.0) throw ConfigError("run.horizon must be >= 0");
    if (cadence < 1) throw ConfigError("output.cadence must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("output.checkpoint_every must be >= 0");
    if (holder_m < 2) throw ConfigError("output.holder_m must be >= 2");
    if (!(holder_alpha > 0.1 && holder_alpha < 0.9))
        throw ConfigError("output.holder_alpha must lie in (0.1, 0.9)");
    if (!format_ndjson && !format_csv)
        throw ConfigError("output.formats must include at least one of ndjson, csv");
    if (traj_dt <= 0.0) throw ConfigError("traj.dt must be > 0");
    if (traj_snapshot_every < 1) throw ConfigError("traj.snapshot_every must be >= 1");
    if (traj_output_every < 1) throw ConfigError("traj.output_every must be >= 1");
    if (family_snapshot_every < 1) throw ConfigError("family.snapshot_every must be >= 1");
}

FamilySpec RunConfig::family_spec() const {
    FamilySpec spec;
    spec.delta_inverses = family_delta_inverses;
    spec.grid = grid;
    spec.stepper = stepper;
    spec.init = init;
    spec.horizon = horizon;
    spec.compare_times = family_compare_times;
    spec.snapshot_every = family_snapshot_every;
    spec.workdir = directory;
    return spec;
}

RunConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw ConfigError("duplicate key '" + key + "' at line " + std::to_string(lineno));
        kv[key] = value;
    }

    RunConfig cfg;
    auto take = [&](const std::string& key) -> const std::string* {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        return &it->second;
    };
    std::map<std::string, bool> known;
    auto handle = [&](const std::string& key, auto&& setter) {
        known[key] = true;
        if (const std::string* v = take(key)) setter(*v);
    };

    handle("grid.n", [&](const std::string& v) { cfg.grid.n = int(parse_int("grid.n", v)); });
    handle("grid.dealias", [&](const std::string& v) {
        if (v == "two_thirds")
            cfg.grid.dealias = Dealias::two_thirds;
        else if (v == "none")
            cfg.grid.dealias = Dealias::none;
        else
            throw ConfigError("bad grid.dealias: " + v);
    });
    handle("stepper.dt", [&](const std::string& v) { cfg.stepper.dt = parse_real("stepper.dt", v); });
    handle("stepper.scheme",
           [&](const std::string& v) { cfg.stepper.scheme = scheme_from_string(v); });
    handle("stepper.mu", [&](const std::string& v) { cfg.stepper.mu = parse_real("stepper.mu", v); });
    handle("stepper.cfl",
           [&](const std::string& v) { cfg.stepper.cfl_c = parse_real("stepper.cfl", v); });
    handle("physics.delta",
           [&](const std::string& v) { cfg.delta = parse_real("physics.delta", v); });
    handle("init.amplitude",
           [&](const std::string& v) { cfg.init.amplitude = parse_real("init.amplitude", v); });
    handle("init.seed", [&](const std::string& v) {
        cfg.init.seed = static_cast<std::uint64_t>(parse_int("init.seed", v));
    });
    handle("init.kmin", [&](const std::string& v) { cfg.init.kmin = int(parse_int("init.kmin", v)); });
    handle("init.kmax", [&](const std::string& v) { cfg.init.kmax = int(parse_int("init.kmax", v)); });
    handle("init.preflow_time", [&](const std::string& v) {
        cfg.init.preflow_time = parse_real("init.preflow_time", v);
    });
    handle("init.preflow_velocity", [&](const std::string& v) {
        cfg.init.preflow_velocity = preflow_kind_from_string(v);
    });
    handle("init.preflow_amplitude", [&](const std::string& v) {
        cfg.init.preflow_amplitude = parse_real("init.preflow_amplitude", v);
    });
    handle("init.preflow_dt",
           [&](const std::string& v) { cfg.init.preflow_dt = parse_real("init.preflow_dt", v); });
    handle("init.epsilon0_target", [&](const std::string& v) {
        cfg.init.epsilon0_target = parse_real("init.epsilon0_target", v);
    });
    handle("run.horizon", [&](const std::string& v) { cfg.horizon = parse_real("run.horizon", v); });
    handle("output.cadence",
           [&](const std::string& v) { cfg.cadence = parse_int("output.cadence", v); });
    handle("output.directory", [&](const std::string& v) { cfg.directory = v; });
    handle("output.formats", [&](const std::string& v) {
        cfg.format_ndjson = false;
        cfg.format_csv = false;
        for (const auto& f : split_list(v)) {
            if (f == "ndjson")
                cfg.format_ndjson = true;
            else if (f == "csv")
                cfg.format_csv = true;
            else
                throw ConfigError("unknown output format: " + f);
        }
    });
    handle("output.checkpoint_every", [&](const std::string& v) {
        cfg.checkpoint_every = parse_int("output.checkpoint_every", v);
    });
    handle("output.holder_m",
           [&](const std::string& v) { cfg.holder_m = int(parse_int("output.holder_m", v)); });
    handle("output.holder_alpha", [&](const std::string& v) {
        cfg.holder_alpha = parse_real("output.holder_alpha", v);
    });
    handle("mode.freeze_f",
           [&](const std::string& v) { cfg.stepper.freeze_F = parse_bool("mode.freeze_f", v); });
    handle("mode.drop_nonlinear", [&](const std::string& v) {
        cfg.stepper.drop_nonlinear = parse_bool("mode.drop_nonlinear", v);
    });
    handle("family.delta_inverses", [&](const std::string& v) {
        cfg.family_delta_inverses.clear();
        for (const auto& p : split_list(v))
            cfg.family_delta_inverses.push_back(int(parse_int("family.delta_inverses", p)));
    });
    handle("family.compare_times", [&](const std::string& v) {
        cfg.family_compare_times.clear();
        for (const auto& p : split_list(v))
            cfg.family_compare_times.push_back(parse_real("family.compare_times", p));
    });
    handle("family.snapshot_every", [&](const std::string& v) {
        cfg.family_snapshot_every = parse_int("family.snapshot_every", v);
    });
    handle("traj.dt", [&](const std::string& v) { cfg.traj_dt = parse_real("traj.dt", v); });
    handle("traj.snapshot_every", [&](const std::string& v) {
        cfg.traj_snapshot_every = parse_int("traj.snapshot_every", v);
    });
    handle("traj.output_every", [&](const std::string& v) {
        cfg.traj_output_every = int(parse_int("traj.output_every", v));
    });

    for (const auto& [key, value] : kv)
        if (!known.count(key)) throw ConfigError("unknown config key: " + key);

    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    auto real = [](double v) { return format_double(v); };
    out << "grid.n = " << cfg.grid.n << "\n";
    out << "grid.dealias = " << to_string(cfg.grid.dealias) << "\n";
    out << "stepper.dt = " << real(cfg.stepper.dt) << "\n";
    out << "stepper.scheme = " << to_string(cfg.stepper.scheme) << "\n";
    out << "stepper.mu = " << real(cfg.stepper.mu) << "\n";
    out << "stepper.cfl = " << real(cfg.stepper.cfl_c) << "\n";
    out << "physics.delta = " << real(cfg.delta) << "\n";
    out << "init.amplitude = " << real(cfg.init.amplitude) << "\n";
    out << "init.seed = " << cfg.init.seed << "\n";
    out << "init.kmin = " << cfg.init.kmin << "\n";
    out << "init.kmax = " << cfg.init.kmax << "\n";
    out << "init.preflow_time = " << real(cfg.init.preflow_time) << "\n";
    out << "init.preflow_velocity = " << to_string(cfg.init.preflow_velocity) << "\n";
    out << "init.preflow_amplitude = " << real(cfg.init.preflow_amplitude) << "\n";
    out << "init.preflow_dt = " << real(cfg.init.preflow_dt) << "\n";
    out << "init.epsilon0_target = " << real(cfg.init.epsilon0_target) << "\n";
    out << "run.horizon = " << real(cfg.horizon) << "\n";
    out << "output.cadence = " << cfg.cadence << "\n";
    out << "output.directory = " << cfg.directory << "\n";
    out << "output.formats = " << (cfg.format_ndjson ? (cfg.format_csv ? "ndjson,csv" : "ndjson")
                                                     : "csv")
        << "\n";
    out << "output.checkpoint_every = " << cfg.checkpoint_every << "\n";
    out << "output.holder_m = " << cfg.holder_m << "\n";
    out << "output.holder_alpha = " << real(cfg.holder_alpha) << "\n";
    out << "mode.freeze_f = " << (cfg.stepper.freeze_F ? "true" : "false") << "\n";
    out << "mode.drop_nonlinear = " << (cfg.stepper.drop_nonlinear ? "true" : "false") << "\n";
    {
        out << "family.delta_inverses = ";
        for (size_t i = 0; i < cfg.family_delta_inverses.size(); ++i)
            out << (i ? "," : "") << cfg.family_delta_inverses[i];
        out << "\n";
        out << "family.compare_times = ";
        for (size_t i = 0; i < cfg.family_compare_times.size(); ++i)
            out << (i ? "," : "") << real(cfg.family_compare_times[i]);
        out << "\n";
    }
    out << "family.snapshot_every = " << cfg.family_snapshot_every << "\n";
    out << "traj.dt = " << real(cfg.traj_dt) << "\n";
    out << "traj.snapshot_every = " << cfg.traj_snapshot_every << "\n";
    out << "traj.output_every = " << cfg.traj_output_every << "\n";
    return out.str();
}

bool operator==(const RunConfig& a, const RunConfig& b) {
    return serialize_config(a) == serialize_config(b);
}

}  // namespace visco2d
