#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "toptdes/criterion.hpp"
#include "toptdes/design.hpp"
#include "toptdes/reference.hpp"
#include "toptdes/solver.hpp"

namespace toptdes {

/// {"points": [...], "weights": [...]}, points in radians. Numbers are written
/// in shortest round-trip form, so parsing gives back the same doubles.
nlohmann::json to_json(const Design& design);

/// Inverse of to_json; the result goes through make_design. Throws
/// InvalidArgument on missing keys, non-numeric entries or length mismatch.
Design design_from_json(const nlohmann::json& j);
Design parse_design(const std::string& text);

nlohmann::json to_json(const CertificateReport& report);
nlohmann::json to_json(const SolveReport& report);

void write_csv(std::ostream& out, const RegionTable& table);
void write_csv(std::ostream& out, const TrajectoryTable& table);
void write_csv(std::ostream& out, const EfficiencyTable& table);

}  // namespace toptdes
