#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace mapseg {

// Writes via a sibling temporary file and rename, so readers never observe
// a partially written file. Throws DataError on I/O failure.
void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

std::string read_file(const std::filesystem::path& path);

}  // namespace mapseg
