#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace forge {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames over `path`, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace forge
