#pragma once

#include <string>
#include <vector>

#include "visco2d/diagnostics.hpp"

namespace visco2d {

/// Builder for one flat NDJSON object. Doubles are emitted with 17
/// significant digits so every value round-trips exactly.
class NdjsonLine {
  public:
    void field(const std::string& key, double v);
    void field(const std::string& key, long long v);
    void field(const std::string& key, const std::string& v);
    void field(const std::string& key, const char* v);
    void field(const std::string& key, bool v);
    std::string str() const;

  private:
    std::string body_;
};

std::string format_double(double v);  // %.17g

std::string diagnostics_to_ndjson(const DiagnosticsRecord& rec);
std::string diagnostics_csv_header();
std::string diagnostics_to_csv(const DiagnosticsRecord& rec);

/// Parse back one NDJSON diagnostics line (used by the family comparator and
/// tests). Throws BadArtifact on malformed lines.
DiagnosticsRecord diagnostics_from_ndjson(const std::string& line);

}  // namespace visco2d
