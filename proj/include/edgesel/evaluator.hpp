#pragma once

#include "edgesel/bounds.hpp"
#include "edgesel/channel.hpp"
#include "edgesel/dataset.hpp"
#include "edgesel/selection.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace edgesel {

enum class SchemeKind { fixed, dynamic, dynamic_truncated, baseline_topk, baseline_calibrated };

/// Evaluation scheme. Baselines use a pinned composite model (0-based here,
/// 1-based in the text form) and, for top-k, the set size kappa.
///
/// Text form: fixed | dynamic | dynamic_truncated |
/// baseline_topk:KAPPA[:L:K] | baseline_calibrated[:L:K]
struct SchemeSpec {
    SchemeKind kind = SchemeKind::fixed;
    std::size_t encoder = 0;
    std::size_t model = 0;
    std::size_t kappa = 20;

    std::string name() const;
    static SchemeSpec parse(std::string_view text);
    /// Throws std::invalid_argument when the baseline model or kappa does not fit `bank`.
    void validate(const ModelBank& bank) const;
};

/// The kappa highest-scoring labels (ties to the lower index), ascending.
/// Throws std::invalid_argument unless 1 <= kappa <= scores.size().
std::vector<std::size_t> baseline_topk_set(std::span<const double> scores, std::size_t kappa);

/// Offline part of a scheme at one channel configuration.
struct ResolvedScheme {
    SchemeSpec spec;
    std::size_t encoder = 0;
    std::size_t model = 0;  ///< fixed choice; fallback for dynamic schemes
    double lambda = 1.0;
    double offline_bound = 1.0;     ///< marginal bound of the fixed choice
    bool offline_feasible = false;  ///< offline_bound <= beta
};

ResolvedScheme resolve_scheme(const SchemeSpec& spec, const ModelCatalog& catalog, const ChannelConfig& config,
                              const GridOptions& grid = {});

struct FrameResult {
    std::uint64_t frame_id = 0;
    std::size_t sample = 0;
    std::size_t encoder = 0;
    std::size_t model = 0;
    double rate_ul = 0.0;
    double rate_dl = 0.0;
    double d_ul = 0.0;
    std::size_t set_size = 0;
    double t_total = 0.0;
    bool met_deadline = false;
    double loss = 0.0;
    double relaxed_loss = 0.0;

    friend bool operator==(const FrameResult&, const FrameResult&) = default;
};

/// One frame end to end: uplink, model choice, prediction set, downlink,
/// deadline check and both losses. `sample` indexes `evaluation`, which must be labeled.
FrameResult run_frame(const ResolvedScheme& scheme, const ModelCatalog& catalog, const ScoreDataset& evaluation,
                      std::size_t sample, const LinkDraw& link, const ChannelConfig& config,
                      const GridOptions& grid = {}, std::uint64_t frame_id = 0);

struct SnrPoint {
    double ul_db = 0.0;
    double dl_db = 0.0;

    friend bool operator==(const SnrPoint&, const SnrPoint&) = default;
};

/// Metrics of one (scheme, SNR) point. Conditional quantities are NaN when no frame met the deadline.
struct MetricsReport {
    std::string scheme;
    SnrPoint snr;
    std::size_t n_frames = 0;
    std::size_t n_met = 0;
    double cond_loss = 0.0;
    double cond_loss_se = 0.0;
    double violation_rate = 0.0;
    double violation_rate_se = 0.0;
    double mean_set_size = 0.0;
    double mean_set_size_se = 0.0;
    double relaxed_loss = 0.0;
    double relaxed_loss_se = 0.0;
    std::vector<double> selection;  ///< frequency per flat (l, k) index
    double offline_bound = 1.0;
    bool offline_feasible = false;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Aggregates frames in order with compensated sums. Standard errors are
/// sd / sqrt(n) (sd with n - 1 in the denominator, 0 for a single value) and
/// sqrt(p (1 - p) / n) for the violation rate.
MetricsReport aggregate(std::span<const FrameResult> frames, std::size_t encoder_count, std::size_t model_count);

struct EvaluationOptions {
    std::vector<SnrPoint> snr_points;
    std::size_t n_frames = 1000;
    std::uint64_t seed = 1;
    GridOptions grid;
    std::size_t workers = 0;  ///< 0: default_worker_count()
    bool keep_frames = true;
};

struct SchemeEvaluation {
    std::vector<MetricsReport> reports;           ///< one per SNR point
    std::vector<std::vector<FrameResult>> frames;  ///< per SNR point, empty unless kept
};

/// Monte Carlo evaluation of one scheme over an SNR grid. Frame f draws its
/// sample (with replacement) and fading from a stream seeded by (seed, f)
/// alone, so every scheme and SNR sees the same draws. Results do not depend
/// on the worker count.
SchemeEvaluation evaluate(const SchemeSpec& scheme, const ModelCatalog& catalog, const ScoreDataset& evaluation,
                          const ChannelConfig& base_config, const EvaluationOptions& options);

/// EDGESEL_WORKERS when set to a positive integer, else the hardware concurrency.
std::size_t default_worker_count();

/// Symmetric SNR points from "start:stop:count" (dB, count >= 1).
std::vector<SnrPoint> parse_snr_grid(std::string_view text);

// CSV interchange. Numbers are written so that they parse back exactly.
// Lines starting with '#' are comments. Encoder and model indices are 1-based.

std::string frames_csv_header();
std::string frame_csv_row(const FrameResult& frame, const SnrPoint& snr, std::string_view scheme);
/// Rows of a frame log; throws ValidationError on malformed input.
std::vector<FrameResult> parse_frames_csv(std::string_view text);

std::string report_csv_header();
std::string report_csv_row(const MetricsReport& report, const ModelBank& bank);

}  // namespace edgesel
