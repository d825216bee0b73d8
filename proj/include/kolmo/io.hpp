#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "kolmo/geometry.hpp"

namespace kolmo {

/// Schema: {"kappa":int,"beta":float,"dims":[int],"blocks":[[row-major
/// floats]],"lambda":float}. Floats survive the round trip bit-exactly.
nlohmann::json spec_to_json(const SystemSpec& spec);
SystemSpec spec_from_json(const nlohmann::json& j);

SystemSpec load_spec_file(const std::filesystem::path& path);
void save_spec_file(const SystemSpec& spec, const std::filesystem::path& path);

/// {"layers": [[...], ...], "t": float} with layers listed x^(0) first.
nlohmann::json point_to_json(const KineticPoint& z);
KineticPoint point_from_json(const SystemSpec& spec, const nlohmann::json& j);

/// Decimal form with 17 significant digits; parses back to the same bits.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace kolmo
