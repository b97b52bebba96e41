#pragma once

// Small file helpers shared by the pipeline stages.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bohm::io {

/// Shortest-safe round-trip text for a double (17 significant digits).
std::string num(double v);

/// Exact text for a double (C99 hex-float), used by checkpoints.
std::string hexnum(double v);
double parse_double(std::string_view s);
std::uint64_t parse_u64(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;  // `#` lines, marker stripped
    std::size_t column(std::string_view name) const;  // throws ConfigError when missing
    /// Value of a `# key=value` comment line, or empty.
    std::string meta(std::string_view key) const;
};

/// Reads a comma-separated file with a header row; `#` lines are kept as
/// comments. Throws ConfigError.
CsvTable read_csv(const std::string& path);

std::string read_file(const std::string& path);
/// Writes via a temporary file and rename so readers never see partial output.
void write_file_atomic(const std::string& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace bohm::io
