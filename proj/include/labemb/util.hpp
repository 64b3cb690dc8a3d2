#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace labemb {

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

/// Fixed-width hex form of a 64-bit FNV-1a hash.
std::string hex64(std::uint64_t value);

/// FNV-1a over the file contents, as hex.
std::string file_fingerprint(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// `%.6g` formatting used by the embedding text format.
std::string format_g6(double value);

}  // namespace labemb
