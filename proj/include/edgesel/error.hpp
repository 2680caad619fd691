#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edgesel {

enum class ValidationKind {
    missing_file,
    malformed,
    dimension_mismatch,
    score_out_of_range,
    non_positive_size,
    label_out_of_range,
};

const char* to_string(ValidationKind kind);

/// Dataset validation failure. `row` is 1-based; 0 when the error is not row-specific.
class ValidationError : public std::runtime_error {
public:
    ValidationError(ValidationKind kind, std::string file, std::size_t row, const std::string& detail);

    ValidationKind kind() const noexcept { return kind_; }
    const std::string& file() const noexcept { return file_; }
    std::size_t row() const noexcept { return row_; }

private:
    ValidationKind kind_;
    std::string file_;
    std::size_t row_;
};

/// Even the full label set cannot satisfy the corrected risk condition.
class InfeasibleCalibration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Computation times alone exhaust the frame deadline.
class InfeasibleTiming : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace edgesel
