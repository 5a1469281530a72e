#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace lbp {

/// Writes to a sibling temp file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace lbp
