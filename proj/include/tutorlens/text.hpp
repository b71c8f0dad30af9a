#pragma once

#include <string>
#include <string_view>

namespace tutorlens::text {

bool is_ascii_space(char c) noexcept;
std::string_view trim(std::string_view s) noexcept;
std::string to_lower_ascii(std::string_view s);
bool is_valid_utf8(std::string_view s) noexcept;
// Lowercase alnum, '-' and '_', 1..128 chars.
bool is_safe_id(std::string_view s) noexcept;
// Lowercases and replaces anything outside the id alphabet with '-'.
std::string slugify(std::string_view s);

}  // namespace tutorlens::text
