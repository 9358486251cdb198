#pragma once

#include <string>

#include "json.hpp"

namespace peerkt {

/// Deterministic serialization: object keys sorted, floating-point values
/// written with exactly 9 fractional digits, two-space indentation.
std::string canonical_dump(const nlohmann::json& doc);

}  // namespace peerkt
