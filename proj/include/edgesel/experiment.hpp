#pragma once

#include "edgesel/bounds.hpp"
#include "edgesel/channel.hpp"
#include "edgesel/conformal.hpp"
#include "edgesel/dataset.hpp"
#include "edgesel/evaluator.hpp"
#include "edgesel/selection.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace edgesel {

/// Everything one run needs. Defaults reproduce the desk-scale benchmark:
/// T = 150 ms, B = 30 MHz, alpha = beta = 0.01, 2000 + 2000 calibration
/// samples and 4000 evaluation samples of the bench-a synthetic data.
struct ExperimentConfig {
    /// Dataset manifest; when empty, a synthetic dataset is generated in memory.
    std::optional<std::filesystem::path> manifest;
    std::string preset = "bench-a";  ///< bench-a | bench-b
    std::size_t synthetic_n = 8000;
    std::size_t label_count = 0;     ///< 0: preset default
    std::uint64_t data_seed = 1;

    std::size_t n_labeled = 2000;
    std::size_t n_unlabeled = 2000;
    std::uint64_t split_seed = 1;

    double bandwidth_hz = 30e6;
    double deadline_s = 0.150;
    double alpha = 0.01;
    double beta = 0.01;
    std::string loss = "miss_detection_01";
    double gamma = 1.0;

    std::vector<std::string> schemes = {"fixed", "dynamic", "dynamic_truncated", "baseline_topk:20:1:1",
                                        "baseline_calibrated:3:3"};
    std::string snr_db = "0:30:6";
    std::optional<std::string> snr_dl_db;  ///< same point count as snr_db; defaults to snr_db
    std::size_t frames = 20000;
    std::uint64_t seed = 1;
    GridMode grid = GridMode::exact;

    nlohmann::ordered_json to_json() const;
    /// Missing keys keep their defaults; unknown keys are rejected.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::filesystem::path& path);
    void validate() const;
    /// Hex FNV-1a of the canonical JSON form.
    std::string hash() const;

    std::vector<SnrPoint> snr_points() const;
    std::vector<SchemeSpec> scheme_specs() const;
    GridOptions grid_options() const;
    ChannelConfig channel() const;
};

/// Bank and data for a preset, as gen-data writes them.
LoadedDataset synthetic_dataset(const std::string& preset, std::size_t n, std::size_t label_count,
                                std::uint64_t seed);

/// Loaded data, split and calibrated catalog.
struct Experiment {
    ModelBank bank;
    DatasetSplit split;
    ModelCatalog catalog;
};

Experiment prepare(const ExperimentConfig& config);

struct PipelineResult {
    std::vector<SchemeSpec> schemes;
    std::vector<SchemeEvaluation> evaluations;  ///< parallel to schemes
    std::string report_csv;                     ///< provenance line, header and one row per (scheme, SNR)
};

PipelineResult run_pipeline(const ExperimentConfig& config, const Experiment& experiment, std::size_t workers = 0,
                            bool keep_frames = false);

/// "# config_hash=<hex>,seed=<n>"
std::string provenance_line(const ExperimentConfig& config);

}  // namespace edgesel
