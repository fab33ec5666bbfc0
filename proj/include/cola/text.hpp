#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cola::text {

std::string_view trim(std::string_view s);

/// Splits on runs of ASCII whitespace; no empty tokens.
std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Cuts `s` after the first '.', '!' or '?' that is followed by whitespace or
/// the end of the string. Returns `s` unchanged if there is no terminator.
std::string_view first_sentence(std::string_view s);

bool has_alpha(std::string_view s);

std::string to_lower(std::string_view s);

}  // namespace cola::text
