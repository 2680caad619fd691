#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edgesel {

struct EncoderSpec {
    std::string id;
    double tau_ul_s = 0.0;  ///< encode + decode time
};

struct InferenceModelSpec {
    std::string id;
    double tau_f_s = 0.0;
};

/// The L encoder/decoder pairs and K inference models. Composite model
/// (l, k) is stored at flat index l * K + k, all indices 0-based.
struct ModelBank {
    std::vector<EncoderSpec> encoders;
    std::vector<InferenceModelSpec> models;  ///< sorted by non-decreasing tau_f_s
    std::size_t label_count = 0;
    double d_lbl_bits = 64.0;

    std::size_t encoder_count() const { return encoders.size(); }
    std::size_t model_count() const { return models.size(); }
    std::size_t combination_count() const { return encoders.size() * models.size(); }
    std::size_t combination_index(std::size_t encoder, std::size_t model) const
    {
        return encoder * models.size() + model;
    }

    /// Throws std::invalid_argument on any broken invariant.
    void validate() const;
};

/// Dense row-major matrix of confidence scores, one row per sample.
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    ScoreMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols) {}
    ScoreMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
    const std::vector<double>& values() const { return values_; }

    friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Per-sample scores for every composite model, uplink sizes per encoder,
/// and (for labeled partitions) the true label of each sample.
struct ScoreDataset {
    std::size_t label_count = 0;
    std::size_t encoder_count = 0;
    std::size_t model_count = 0;
    std::optional<std::vector<std::uint32_t>> labels;
    std::vector<ScoreMatrix> scores;               ///< [l * K + k], each size() x label_count
    std::vector<std::vector<double>> ul_sizes;     ///< [l][sample], bits

    std::size_t size() const { return ul_sizes.empty() ? 0 : ul_sizes.front().size(); }
    bool labeled() const { return labels.has_value(); }
    const ScoreMatrix& score_matrix(std::size_t encoder, std::size_t model) const
    {
        return scores[encoder * model_count + model];
    }
    std::span<const std::uint32_t> label_span() const;

    /// Copies the given samples in order. Labels are dropped when `keep_labels` is false.
    ScoreDataset subset(std::span<const std::size_t> indices, bool keep_labels = true) const;

    /// Throws std::invalid_argument on inconsistent shapes or out-of-range values.
    void validate(const ModelBank& bank) const;

    friend bool operator==(const ScoreDataset&, const ScoreDataset&) = default;
};

/// Disjoint sample indices for the labeled calibration set, the unlabeled
/// calibration set and the evaluation remainder.
struct Partition {
    std::vector<std::size_t> labeled;
    std::vector<std::size_t> unlabeled;
    std::vector<std::size_t> evaluation;
};

Partition split_indices(std::size_t n, std::size_t n_labeled, std::size_t n_unlabeled, std::uint64_t seed);

struct DatasetSplit {
    ScoreDataset labeled;
    ScoreDataset unlabeled;  ///< labels removed
    ScoreDataset evaluation;
    Partition indices;
};

/// Random disjoint split; throws std::invalid_argument unless n_labeled + n_unlabeled < N.
DatasetSplit split(const ScoreDataset& data, std::size_t n_labeled, std::size_t n_unlabeled, std::uint64_t seed);

struct LoadedDataset {
    ModelBank bank;
    ScoreDataset data;
};

/// Reads a JSON manifest and the CSV files it references. Throws ValidationError.
LoadedDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes manifest.json plus CSV files into an existing directory. Scores are
/// written with 9 significant digits, sizes and labels as integers.
void write_dataset(const std::filesystem::path& dir, const ModelBank& bank, const ScoreDataset& data);

// ---------------------------------------------------------------------------
// Synthetic stand-in for the encoder/classifier pipeline.

struct SizeDistribution {
    double log_mean = 0.0;  ///< mean of ln(bits)
    double log_sd = 0.0;    ///< sd of ln(bits)
};

struct SyntheticModelConfig {
    /// Probability that the true label gets the largest score, per composite
    /// model, flat index l * K + k. Values in (0, 1].
    std::vector<double> accuracy;
    /// Symmetric Dirichlet parameter of the score vector; small values give peaked scores.
    double concentration = 0.1;
    /// When the true label is not the argmax, its rank is 2 + j with
    /// P(j) proportional to decay^j.
    double miss_rank_decay = 0.5;
    std::vector<SizeDistribution> ul_size;  ///< per encoder
    /// Correlation between log uplink size and the latent difficulty.
    double size_difficulty_correlation = 0.0;
    std::uint64_t seed = 1;

    void validate(const ModelBank& bank) const;
};

/// Deterministic for a fixed config (seed included); single random stream.
ScoreDataset generate_synthetic(const SyntheticModelConfig& config, std::size_t n, const ModelBank& bank);

namespace presets {

/// WebP-0/20/50/80 encoders and EfficientNetV2-S/M/L timings.
ModelBank bench_b_bank(std::size_t label_count = 1000, double d_lbl_bits = 64.0);

/// Desk-scale benchmark: 50 labels, three encoders, three models.
ModelBank bench_a_bank();
SyntheticModelConfig bench_a_synthetic(std::uint64_t seed);

/// A plausible synthetic config for any bank: accuracy grows with l and k.
SyntheticModelConfig default_synthetic(const ModelBank& bank, std::uint64_t seed);

}  // namespace presets

}  // namespace edgesel
