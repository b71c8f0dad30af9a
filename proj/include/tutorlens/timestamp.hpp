#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace tutorlens {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

Timestamp now_timestamp();
// "2026-10-15T08:30:00.123Z"
std::string format_timestamp(Timestamp ts);
std::optional<Timestamp> parse_timestamp(std::string_view s);

}  // namespace tutorlens
