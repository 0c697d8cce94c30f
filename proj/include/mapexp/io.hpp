#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "mapexp/model.hpp"

namespace mapexp {

using json = nlohmann::json;

/// Malformed or structurally invalid model document.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

MapSpec spec_from_json(const json& j);
MapSpec spec_from_text(const std::string& text);
json spec_to_json(const MapSpec& spec);

json law_to_json(const BivLaw& l);
BivLaw law_from_json(const json& j);

/// JSON number, or a string for non-finite values.
json num(double x);
json num(const XReal& x);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace mapexp
