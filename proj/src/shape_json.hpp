#pragma once

#include <json.hpp>

#include "topocolor/synth.hpp"

namespace topocolor::synth {

nlohmann::json shape_to_json(const ShapeSpec& s);
/// Throws DataError on malformed entries.
ShapeSpec shape_from_json(const nlohmann::json& j);

}  // namespace topocolor::synth
