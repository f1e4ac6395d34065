#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace zdjscc::cli {

/// 17 significant digits, '.' radix; non-finite values print as nan/inf/-inf.
std::string format_double(double x);

/// Shortest round-trip text, always with a decimal point ("2.0", "0.5").
std::string format_short(double x);

/// Writes `content` to a temporary sibling of `path` and renames it into
/// place, so readers never observe a partial file. Creates the parent
/// directory if needed. Throws std::filesystem::filesystem_error or
/// std::runtime_error on I/O failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace zdjscc::cli
