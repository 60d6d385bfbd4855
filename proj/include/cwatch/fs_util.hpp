#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace cwatch {

std::string read_file(const std::filesystem::path& path);

// Called between writing the temporary file and renaming it into place.
using WriteHook = std::function<void(const std::filesystem::path& temp, const std::filesystem::path& target)>;

// Writes to a sibling temporary file, fsyncs, then renames over `path`, so
// readers see either the old or the new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content,
                       const WriteHook& before_rename = {});

// Temporary files left by interrupted writes are named "<name>.tmp-<n>".
bool is_temp_file(const std::filesystem::path& path);

}  // namespace cwatch
