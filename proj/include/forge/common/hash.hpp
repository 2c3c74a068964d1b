#pragma once

#include <span>
#include <string>
#include <string_view>

namespace forge {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);
std::string sha256_hex(std::span<const unsigned char> data);

std::string hex_encode(std::string_view bytes);
/// Returns false on odd length or non-hex characters.
bool hex_decode(std::string_view hex, std::string& out);

}  // namespace forge
