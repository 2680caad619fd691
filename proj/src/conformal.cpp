#include "edgesel/conformal.hpp"

#include "edgesel/error.hpp"
#include "edgesel/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace edgesel {

double LossFunction::operator()(std::span<const std::size_t> set, std::uint32_t label) const
{
    const bool covered = std::binary_search(set.begin(), set.end(), static_cast<std::size_t>(label));
    // |Y \ set| / |Y| with a singleton Y is the miss indicator.
    return value(covered);
}

std::string LossFunction::name() const
{
    return kind == LossKind::miss_detection_01 ? "miss_detection_01" : "false_negative_rate";
}

LossFunction LossFunction::parse(std::string_view name, double gamma)
{
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("loss bound gamma must be positive and finite");
    }
    if (name == "miss_detection_01" || name == "01" || name == "miss") {
        return {LossKind::miss_detection_01, gamma};
    }
    if (name == "false_negative_rate" || name == "fnr") {
        return {LossKind::false_negative_rate, gamma};
    }
    throw std::invalid_argument("unknown loss kind: " + std::string(name));
}

std::vector<std::size_t> prediction_set(std::span<const double> scores, double lambda)
{
    std::vector<std::size_t> set;
    const double cutoff = 1.0 - lambda;
    for (std::size_t y = 0; y < scores.size(); ++y) {
        if (scores[y] >= cutoff) {
            set.push_back(y);
        }
    }
    return set;
}

std::size_t prediction_set_size(std::span<const double> scores, double lambda)
{
    const double cutoff = 1.0 - lambda;
    return static_cast<std::size_t>(
        std::count_if(scores.begin(), scores.end(), [cutoff](double s) { return s >= cutoff; }));
}

double lambda_admitting(double score)
{
    if (score >= 1.0) {
        return 0.0;
    }
    if (score <= 0.0) {
        return 1.0;
    }
    // 1 - lambda is monotone in lambda and non-negative doubles order like
    // their bit patterns, so bisect on the bits for the smallest admitting value.
    std::uint64_t lo = 0;
    std::uint64_t hi = std::bit_cast<std::uint64_t>(1.0);
    while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (1.0 - std::bit_cast<double>(mid) <= score) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return std::bit_cast<double>(lo);
}

double corrected_risk_level(double alpha, double beta)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0, 1)");
    }
    if (!(beta >= 0.0 && beta < 1.0)) {
        throw std::invalid_argument("beta must lie in [0, 1)");
    }
    return alpha * (1.0 - beta);
}

double empirical_risk(const ScoreMatrix& scores, std::span<const std::uint32_t> labels, const LossFunction& loss,
                      double lambda)
{
    if (scores.rows() != labels.size()) {
        throw std::invalid_argument("empirical_risk: label count does not match score rows");
    }
    if (labels.empty()) {
        return 0.0;
    }
    io::CompensatedSum total;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        total.add(loss.value(in_prediction_set(scores(i, labels[i]), lambda)));
    }
    return total.value() / static_cast<double>(labels.size());
}

bool meets_corrected_risk(double loss_sum, std::size_t n, double epsilon, double gamma)
{
    // mean <= eps - (gamma - eps) / N  <=>  sum <= eps * (N + 1) - gamma
    const double limit = epsilon * static_cast<double>(n + 1) - gamma;
    const double tol = 1e-12 * (epsilon * static_cast<double>(n + 1) + gamma);
    return loss_sum <= limit + tol;
}

CalibratedModel calibrate(const ScoreMatrix& scores, std::span<const std::uint32_t> labels, const LossFunction& loss,
                          double epsilon, std::size_t encoder, std::size_t model)
{
    const std::size_t n = labels.size();
    if (n == 0) {
        throw std::invalid_argument("calibrate: empty calibration set");
    }
    if (scores.rows() != n) {
        throw std::invalid_argument("calibrate: label count does not match score rows");
    }
    if (!(epsilon > 0.0) || !(epsilon < loss.gamma)) {
        throw std::invalid_argument("calibrate: epsilon must lie in (0, gamma)");
    }

    // Losses change only when the cutoff crosses a true-label score, so the
    // risk is a step function with jumps at lambda_admitting(true score).
    std::vector<double> true_scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        true_scores[i] = scores(i, labels[i]);
    }
    std::sort(true_scores.begin(), true_scores.end());

    const auto loss_sum_at = [&](double lambda) {
        const double cutoff = 1.0 - lambda;
        const auto misses = static_cast<std::size_t>(
            std::lower_bound(true_scores.begin(), true_scores.end(), cutoff) - true_scores.begin());
        return loss.gamma * static_cast<double>(misses);
    };

    if (!meets_corrected_risk(loss_sum_at(1.0), n, epsilon, loss.gamma)) {
        throw InfeasibleCalibration("calibration infeasible: epsilon = " + io::format_double(epsilon, 6) +
                                    " is below gamma / (N + 1) for N = " + std::to_string(n));
    }

    std::vector<double> candidates;
    candidates.reserve(n + 2);
    candidates.push_back(0.0);
    for (const double s : true_scores) {
        candidates.push_back(lambda_admitting(s));
    }
    candidates.push_back(1.0);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // Risk is non-increasing in lambda: binary search the first passing candidate.
    const auto it = std::partition_point(candidates.begin(), candidates.end(), [&](double lambda) {
        return !meets_corrected_risk(loss_sum_at(lambda), n, epsilon, loss.gamma);
    });
    const double lambda = *it;

    CalibratedModel out;
    out.encoder = encoder;
    out.model = model;
    out.lambda = lambda;
    out.epsilon = epsilon;
    out.n_calibration = n;
    out.empirical_risk = loss_sum_at(lambda) / static_cast<double>(n);
    return out;
}

std::string calibration_json(const CalibratedModel& cal, const ModelBank& bank)
{
    nlohmann::ordered_json j;
    j["encoder_id"] = bank.encoders.at(cal.encoder).id;
    j["model_id"] = bank.models.at(cal.model).id;
    j["lambda"] = cal.lambda;
    j["epsilon"] = cal.epsilon;
    j["n_calibration"] = cal.n_calibration;
    return j.dump(2);
}

}  // namespace edgesel
