#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace cola {

/// Canonical bytes of a JSON document: object keys sorted bytewise, no
/// insignificant whitespace, integers verbatim, floating-point values in
/// shortest round-trip decimal form. Non-finite numbers are rejected.
std::string canonical_json(const nlohmann::json& doc);

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::string_view bytes);
std::string to_hex(const Sha256& digest);

}  // namespace cola
