#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace edgesel::io {

/// Decimal text for `value` with `digits` significant digits ("%.*g").
std::string format_double(double value, int digits);
/// Shortest text that parses back to exactly `value`.
std::string format_exact(double value);

/// Parses a full token as a double; false on any trailing garbage.
bool parse_double(std::string_view text, double& out);
bool parse_uint(std::string_view text, std::uint64_t& out);

std::vector<std::string_view> split(std::string_view line, char delimiter);
std::string_view trim(std::string_view text);

/// Reads a whole file. Throws ValidationError(missing_file) when absent.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

}  // namespace edgesel::io
