#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace tutorlens {

// Writes to a sibling temp file, then renames over the target. The hook
// runs after the temp file is complete and before the rename; tests use it
// to simulate a crash. Throws Error(StorageFailed).
void write_file_atomic(const std::filesystem::path& target, std::string_view contents,
                       const std::function<void(const std::filesystem::path& temp)>& before_rename = {});

std::optional<std::string> read_file(const std::filesystem::path& path);

}  // namespace tutorlens
