#pragma once

#include "edgesel/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace edgesel {

enum class LossKind {
    miss_detection_01,    ///< gamma * 1[Y not in set]
    false_negative_rate,  ///< gamma * |Y \ set| / |Y|
};

/// A loss that never increases when the prediction set grows, bounded by gamma.
/// Ground truth is a single label here, so both kinds take the same values.
struct LossFunction {
    LossKind kind = LossKind::miss_detection_01;
    double gamma = 1.0;

    /// `set` must be sorted ascending.
    double operator()(std::span<const std::size_t> set, std::uint32_t label) const;
    /// Loss of a set that does or does not contain the label.
    double value(bool covered) const { return covered ? 0.0 : gamma; }

    std::string name() const;
    static LossFunction parse(std::string_view name, double gamma = 1.0);
};

/// Labels whose score is at least 1 - lambda, ascending.
std::vector<std::size_t> prediction_set(std::span<const double> scores, double lambda);
std::size_t prediction_set_size(std::span<const double> scores, double lambda);
inline bool in_prediction_set(double score, double lambda) { return score >= 1.0 - lambda; }

/// Smallest double lambda in [0, 1] with 1 - lambda <= score in floating point.
double lambda_admitting(double score);

/// alpha * (1 - beta): the unconditional risk target that keeps the
/// deadline-conditional loss at or below alpha.
double corrected_risk_level(double alpha, double beta);

/// Mean loss over the samples at threshold lambda.
double empirical_risk(const ScoreMatrix& scores, std::span<const std::uint32_t> labels, const LossFunction& loss,
                      double lambda);

struct CalibratedModel {
    std::size_t encoder = 0;
    std::size_t model = 0;
    double lambda = 1.0;
    double epsilon = 0.0;
    std::size_t n_calibration = 0;
    double empirical_risk = 0.0;  ///< calibration risk at lambda
};

/// Conformal risk control: the smallest threshold whose calibration risk is at
/// most epsilon - (gamma - epsilon) / N. Candidates are 0, 1 and every
/// lambda that admits an observed score, so the search is exact.
///
/// Throws std::invalid_argument for epsilon outside (0, gamma) or empty input,
/// and InfeasibleCalibration when even lambda = 1 fails the condition.
CalibratedModel calibrate(const ScoreMatrix& scores, std::span<const std::uint32_t> labels, const LossFunction& loss,
                          double epsilon, std::size_t encoder = 0, std::size_t model = 0);

/// Whether a calibration-set risk meets the finite-sample corrected condition.
bool meets_corrected_risk(double risk, std::size_t n, double epsilon, double gamma);

/// {encoder_id, model_id, lambda, epsilon, n_calibration} as JSON text.
std::string calibration_json(const CalibratedModel& cal, const ModelBank& bank);

}  // namespace edgesel
