#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mlp.hpp"

namespace contpose {

// On-disk parameter format: magic, little-endian u32 header length, JSON
// header (layer shapes per named net, activation, encoding config, seed,
// caller extras), then one flat little-endian f64 array holding each net's
// layers in order (column-major weights, then bias).
//
// Round trips are bit exact: doubles are written raw.

nlohmann::json encoding_to_json(const EncodingConfig& cfg);
EncodingConfig encoding_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Mlp*>>& nets,
                     const nlohmann::json& extra);

// Loads into the named nets (shapes taken from the header; nets are resized).
// Returns the full header so callers can read their extras back.
nlohmann::json load_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, Mlp*>>& nets);

}  // namespace contpose
