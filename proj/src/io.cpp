#include "edgesel/io.hpp"

#include "edgesel/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace edgesel {

const char* to_string(ValidationKind kind)
{
    switch (kind) {
    case ValidationKind::missing_file: return "missing file";
    case ValidationKind::malformed: return "malformed input";
    case ValidationKind::dimension_mismatch: return "dimension mismatch";
    case ValidationKind::score_out_of_range: return "score outside [0,1]";
    case ValidationKind::non_positive_size: return "non-positive size";
    case ValidationKind::label_out_of_range: return "label out of range";
    }
    return "validation error";
}

namespace {

std::string validation_message(ValidationKind kind, const std::string& file, std::size_t row,
                               const std::string& detail)
{
    std::string msg = std::string(to_string(kind)) + ": " + file;
    if (row > 0) {
        msg += ", row " + std::to_string(row);
    }
    if (!detail.empty()) {
        msg += ": " + detail;
    }
    return msg;
}

}  // namespace

ValidationError::ValidationError(ValidationKind kind, std::string file, std::size_t row,
                                 const std::string& detail)
    : std::runtime_error(validation_message(kind, file, row, detail)),
      kind_(kind),
      file_(std::move(file)),
      row_(row)
{
}

namespace io {

std::string format_double(double value, int digits)
{
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, value);
    return buf;
}

std::string format_exact(double value)
{
    if (!std::isfinite(value)) {
        return format_double(value, 17);
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

bool parse_double(std::string_view text, double& out)
{
    text = trim(text);
    if (text.empty()) {
        return false;
    }
    if (text == "nan") {
        out = std::nan("");
        return true;
    }
    if (text == "inf" || text == "-inf") {
        out = text[0] == '-' ? -HUGE_VAL : HUGE_VAL;
        return true;
    }
    if (text.front() == '+') {
        text.remove_prefix(1);
    }
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

bool parse_uint(std::string_view text, std::uint64_t& out)
{
    text = trim(text);
    if (text.empty()) {
        return false;
    }
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

std::vector<std::string_view> split(std::string_view line, char delimiter)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delimiter, start);
        if (pos == std::string_view::npos) {
            parts.push_back(line.substr(start));
            return parts;
        }
        parts.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string_view trim(std::string_view text)
{
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError(ValidationKind::missing_file, path.string(), 0, "cannot open");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                                 ec.message());
    }
}

std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

void CompensatedSum::add(double x)
{
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
        compensation_ += (sum_ - t) + x;
    } else {
        compensation_ += (x - t) + sum_;
    }
    sum_ = t;
}

}  // namespace io
}  // namespace edgesel
