#pragma once

#include <string>

#include <json.hpp>

#include "sc2tools/versioned.hpp"

namespace sc2tools::versioned {

// Lossless JSON form of a TypedValue. Every value is a one-key object
// naming its kind:
//   {"int": -5}  {"bool": true}  {"blob": "<hex>"}  {"fourcc": "<hex8>"}
//   {"bits": 12, "hex": "<hex>"}  {"array": [...]}  {"optional": null | v}
//   {"struct": [[id, v], ...]}
nlohmann::json value_to_json(const TypedValue& value);

/// Throws Error(InvalidValue, path) naming the first offending node.
TypedValue value_from_json(const nlohmann::json& j, const std::string& path = "$");

}  // namespace sc2tools::versioned
