#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace illc {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Shortest-exact formatting is not needed here; 17 significant digits
// always round-trips a finite double.
std::string format_double(double v);

std::string fnv1a_hex(std::string_view text);

}  // namespace illc
