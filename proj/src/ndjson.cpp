#include "visco2d/ndjson.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "visco2d/errors.hpp"

namespace visco2d {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void NdjsonLine::field(const std::string& key, double v) {
    body_ += body_.empty() ? "" : ",";
    body_ += "\"" + key + "\":" + format_double(v);
}

void NdjsonLine::field(const std::string& key, long long v) {
    body_ += body_.empty() ? "" : ",";
    body_ += "\"" + key + "\":" + std::to_string(v);
}

void NdjsonLine::field(const std::string& key, const std::string& v) {
    body_ += body_.empty() ? "" : ",";
    body_ += "\"" + key + "\":" + nlohmann::json(v).dump();
}

void NdjsonLine::field(const std::string& key, const char* v) {
    field(key, std::string(v));
}

void NdjsonLine::field(const std::string& key, bool v) {
    body_ += body_.empty() ? "" : ",";
    body_ += "\"" + key + "\":" + (v ? "true" : "false");
}

std::string NdjsonLine::str() const { return "{" + body_ + "}"; }

std::string diagnostics_to_ndjson(const DiagnosticsRecord& rec) {
    NdjsonLine line;
    line.field("schema", "diag.v1");
    for (const auto& [name, member] : diagnostics_columns()) line.field(name, rec.*member);
    return line.str();
}

std::string diagnostics_csv_header() {
    std::string out;
    for (const auto& [name, member] : diagnostics_columns()) {
        if (!out.empty()) out += ",";
        out += name;
    }
    return out;
}

std::string diagnostics_to_csv(const DiagnosticsRecord& rec) {
    std::string out;
    for (const auto& [name, member] : diagnostics_columns()) {
        if (!out.empty()) out += ",";
        out += format_double(rec.*member);
    }
    return out;
}

DiagnosticsRecord diagnostics_from_ndjson(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw BadArtifact("malformed diagnostics NDJSON line");
    if (j.value("schema", "") != "diag.v1")
        throw BadArtifact("unknown diagnostics schema: " + j.value("schema", "<none>"));
    DiagnosticsRecord rec;
    for (const auto& [name, member] : diagnostics_columns()) {
        if (!j.contains(name)) throw BadArtifact("diagnostics line missing column " + name);
        rec.*member = j.at(name).get<double>();
    }
    return rec;
}

}  // namespace visco2d
