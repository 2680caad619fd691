#include "edgesel/dataset.hpp"
#include "edgesel/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace edgesel {

void SyntheticModelConfig::validate(const ModelBank& bank) const
{
    if (accuracy.size() != bank.combination_count()) {
        throw std::invalid_argument("synthetic config: need one accuracy per composite model");
    }
    for (const double a : accuracy) {
        if (!(a > 0.0 && a <= 1.0)) {
            throw std::invalid_argument("synthetic config: accuracy must lie in (0, 1]");
        }
    }
    if (!(concentration > 0.0) || !std::isfinite(concentration)) {
        throw std::invalid_argument("synthetic config: concentration must be positive");
    }
    if (!(miss_rank_decay > 0.0 && miss_rank_decay <= 1.0)) {
        throw std::invalid_argument("synthetic config: miss_rank_decay must lie in (0, 1]");
    }
    if (ul_size.size() != bank.encoder_count()) {
        throw std::invalid_argument("synthetic config: need one size distribution per encoder");
    }
    for (const auto& s : ul_size) {
        if (!std::isfinite(s.log_mean) || !(s.log_sd >= 0.0) || !std::isfinite(s.log_sd)) {
            throw std::invalid_argument("synthetic config: invalid size distribution");
        }
    }
    if (!(size_difficulty_correlation >= -1.0 && size_difficulty_correlation <= 1.0)) {
        throw std::invalid_argument("synthetic config: correlation must lie in [-1, 1]");
    }
}

namespace {

/// Dirichlet(concentration, ..., concentration) draw written into `out`.
void dirichlet(Rng& rng, double concentration, std::span<double> out)
{
    double max_log = -HUGE_VAL;
    for (auto& v : out) {
        v = rng.log_gamma_variate(concentration);
        max_log = std::max(max_log, v);
    }
    double total = 0.0;
    for (auto& v : out) {
        v = std::exp(v - max_log);
        total += v;
    }
    for (auto& v : out) {
        v /= total;
    }
}

/// Truncated geometric on {0, ..., max_j} with P(j) proportional to decay^j.
std::size_t miss_offset(Rng& rng, double decay, std::size_t max_j)
{
    double total = 0.0;
    double w = 1.0;
    for (std::size_t j = 0; j <= max_j; ++j) {
        total += w;
        w *= decay;
    }
    double target = rng.uniform() * total;
    w = 1.0;
    for (std::size_t j = 0; j < max_j; ++j) {
        if (target < w) {
            return j;
        }
        target -= w;
        w *= decay;
    }
    return max_j;
}

}  // namespace

ScoreDataset generate_synthetic(const SyntheticModelConfig& config, std::size_t n, const ModelBank& bank)
{
    bank.validate();
    config.validate(bank);
    if (n == 0) {
        throw std::invalid_argument("generate_synthetic: sample count must be at least 1");
    }
    const std::size_t labels = bank.label_count;
    const std::size_t n_enc = bank.encoder_count();
    const std::size_t n_comb = bank.combination_count();
    const double rho = config.size_difficulty_correlation;
    const double rho_c = std::sqrt(std::max(0.0, 1.0 - rho * rho));

    ScoreDataset data;
    data.label_count = labels;
    data.encoder_count = n_enc;
    data.model_count = bank.model_count();
    data.labels = std::vector<std::uint32_t>(n);
    data.ul_sizes.assign(n_enc, std::vector<double>(n));
    data.scores.assign(n_comb, ScoreMatrix(n, labels));

    Rng rng(derive_seed(config.seed, 0xda7a));
    std::vector<double> draw(labels);
    std::vector<double> rest(labels - 1);

    for (std::size_t i = 0; i < n; ++i) {
        const auto y = static_cast<std::uint32_t>(rng.uniform_index(labels));
        (*data.labels)[i] = y;

        // Latent difficulty shared by every composite model of this sample.
        const double z_difficulty = rng.normal();
        const double difficulty = 0.5 * std::erfc(-z_difficulty / std::sqrt(2.0));

        for (std::size_t l = 0; l < n_enc; ++l) {
            const double z = rho * z_difficulty + rho_c * rng.normal();
            const auto& dist = config.ul_size[l];
            data.ul_sizes[l][i] = std::max(1.0, std::round(std::exp(dist.log_mean + dist.log_sd * z)));
        }

        for (std::size_t c = 0; c < n_comb; ++c) {
            dirichlet(rng, config.concentration, draw);
            std::sort(draw.begin(), draw.end(), std::greater<>());
            const double a = config.accuracy[c];
            const bool correct = a >= 1.0 || difficulty < a;
            const std::size_t rank = correct ? 0 : 1 + miss_offset(rng, config.miss_rank_decay, labels - 2);

            auto row = data.scores[c].row(i);
            row[y] = draw[rank];
            std::size_t r = 0;
            for (std::size_t j = 0; j < labels; ++j) {
                if (j != rank) {
                    rest[r++] = draw[j];
                }
            }
            for (std::size_t j = rest.size(); j > 1; --j) {
                std::swap(rest[j - 1], rest[rng.uniform_index(j)]);
            }
            r = 0;
            for (std::size_t j = 0; j < labels; ++j) {
                if (j != y) {
                    row[j] = rest[r++];
                }
            }
        }
    }
    return data;
}

namespace presets {

ModelBank bench_b_bank(std::size_t label_count, double d_lbl_bits)
{
    ModelBank bank;
    bank.encoders = {{"webp-0", 0.0100}, {"webp-20", 0.0125}, {"webp-50", 0.0150}, {"webp-80", 0.0175}};
    bank.models = {{"effnetv2-s", 0.024}, {"effnetv2-m", 0.057}, {"effnetv2-l", 0.098}};
    bank.label_count = label_count;
    bank.d_lbl_bits = d_lbl_bits;
    return bank;
}

ModelBank bench_a_bank()
{
    ModelBank bank;
    bank.encoders = {{"q-low", 0.0100}, {"q-mid", 0.0125}, {"q-high", 0.0150}};
    bank.models = {{"small", 0.024}, {"medium", 0.057}, {"large", 0.098}};
    bank.label_count = 50;
    bank.d_lbl_bits = 64.0;
    return bank;
}

SyntheticModelConfig bench_a_synthetic(std::uint64_t seed)
{
    SyntheticModelConfig c;
    // The large model is weak on the lowest-quality input.
    c.accuracy = {0.80, 0.84, 0.72,
                  0.86, 0.90, 0.92,
                  0.89, 0.93, 0.96};
    c.concentration = 0.1;
    c.miss_rank_decay = 0.5;
    c.ul_size = {{std::log(12e3), 0.35}, {std::log(50e3), 0.35}, {std::log(150e3), 0.35}};
    c.size_difficulty_correlation = 0.0;
    c.seed = seed;
    return c;
}

SyntheticModelConfig default_synthetic(const ModelBank& bank, std::uint64_t seed)
{
    SyntheticModelConfig c;
    const std::size_t L = bank.encoder_count();
    const std::size_t K = bank.model_count();
    const auto frac = [](std::size_t i, std::size_t n) {
        return n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 1.0;
    };
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t k = 0; k < K; ++k) {
            c.accuracy.push_back(0.78 + 0.09 * frac(l, L) + 0.09 * frac(k, K));
        }
        c.ul_size.push_back({std::log(12e3) + 2.5 * frac(l, L), 0.35});
    }
    c.seed = seed;
    return c;
}

}  // namespace presets

}  // namespace edgesel
