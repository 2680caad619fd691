#pragma once

#include "edgesel/dataset.hpp"
#include "edgesel/random.hpp"

#include <cstdint>
#include <filesystem>
#include <unistd.h>
#include <string>
#include <vector>

namespace fixture {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("edgesel_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// L x K bank with evenly spaced timings that all fit a 150 ms deadline.
inline edgesel::ModelBank small_bank(std::size_t L, std::size_t K, std::size_t labels)
{
    edgesel::ModelBank bank;
    for (std::size_t l = 0; l < L; ++l) {
        bank.encoders.push_back({"e" + std::to_string(l + 1), 0.010 + 0.0025 * static_cast<double>(l)});
    }
    for (std::size_t k = 0; k < K; ++k) {
        bank.models.push_back({"m" + std::to_string(k + 1), 0.024 + 0.030 * static_cast<double>(k)});
    }
    bank.label_count = labels;
    bank.d_lbl_bits = 64.0;
    return bank;
}

inline edgesel::ScoreDataset synthetic(const edgesel::ModelBank& bank, std::size_t n, std::uint64_t seed)
{
    return edgesel::generate_synthetic(edgesel::presets::default_synthetic(bank, seed), n, bank);
}

/// Dataset with explicit values: scores[c] is row-major n x labels.
inline edgesel::ScoreDataset explicit_dataset(std::size_t labels, std::size_t L, std::size_t K,
                                              std::vector<std::vector<double>> scores,
                                              std::vector<std::vector<double>> ul_sizes,
                                              std::vector<std::uint32_t> y)
{
    edgesel::ScoreDataset d;
    d.label_count = labels;
    d.encoder_count = L;
    d.model_count = K;
    const std::size_t n = ul_sizes.front().size();
    for (auto& s : scores) {
        d.scores.emplace_back(n, labels, std::move(s));
    }
    d.ul_sizes = std::move(ul_sizes);
    if (!y.empty()) {
        d.labels = std::move(y);
    }
    return d;
}

}  // namespace fixture
