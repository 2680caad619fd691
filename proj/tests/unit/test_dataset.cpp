#include "edgesel/dataset.hpp"
#include "edgesel/error.hpp"
#include "edgesel/io.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <set>

using namespace edgesel;

namespace {

std::string replace_line(const std::string& text, std::size_t line, const std::string& replacement)
{
    const auto lines = io::split(text, '\n');
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i + 1 == lines.size() && lines[i].empty()) {
            break;
        }
        out += (i + 1 == line ? replacement : std::string(lines[i])) + "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("manifest with 2 encoders x 2 models loads 100x10 score matrices")
{
    fixture::TempDir dir("load");
    const auto bank = fixture::small_bank(2, 2, 10);
    write_dataset(dir.path(), bank, fixture::synthetic(bank, 100, 3));

    const auto loaded = load_dataset(dir.path() / "manifest.json");
    CHECK(loaded.bank.encoder_count() == 2);
    CHECK(loaded.bank.model_count() == 2);
    CHECK(loaded.data.scores.size() == 4);
    for (const auto& m : loaded.data.scores) {
        CHECK(m.rows() == 100);
        CHECK(m.cols() == 10);
    }
    CHECK(loaded.data.size() == 100);
    CHECK(loaded.data.labeled());
}

TEST_CASE("a score of 1.3 in row 7 is rejected naming the file and row")
{
    fixture::TempDir dir("badscore");
    const auto bank = fixture::small_bank(1, 1, 3);
    write_dataset(dir.path(), bank, fixture::synthetic(bank, 10, 1));
    const auto file = dir.path() / "scores_e0_m0.csv";
    io::write_file_atomic(file, replace_line(io::read_file(file), 7, "1.3,0.1,0.2"));

    try {
        load_dataset(dir.path() / "manifest.json");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.kind() == ValidationKind::score_out_of_range);
        CHECK(e.row() == 7);
        CHECK(e.file().find("scores_e0_m0.csv") != std::string::npos);
        CHECK(std::string(e.what()).find("row 7") != std::string::npos);
    }
}

TEST_CASE("distinct validation errors for missing files, sizes and shapes")
{
    fixture::TempDir dir("errors");
    const auto bank = fixture::small_bank(1, 1, 3);
    const auto manifest = dir.path() / "manifest.json";

    SUBCASE("missing manifest")
    {
        try {
            load_dataset(dir.path() / "nope.json");
            FAIL("expected an error");
        } catch (const ValidationError& e) {
            CHECK(e.kind() == ValidationKind::missing_file);
            CHECK(e.file().find("nope.json") != std::string::npos);
        }
    }
    SUBCASE("missing referenced file")
    {
        write_dataset(dir.path(), bank, fixture::synthetic(bank, 10, 1));
        std::filesystem::remove(dir.path() / "ul_sizes_e0.csv");
        try {
            load_dataset(manifest);
            FAIL("expected an error");
        } catch (const ValidationError& e) {
            CHECK(e.kind() == ValidationKind::missing_file);
            CHECK(e.file().find("ul_sizes_e0.csv") != std::string::npos);
        }
    }
    SUBCASE("non-positive size")
    {
        write_dataset(dir.path(), bank, fixture::synthetic(bank, 10, 1));
        const auto file = dir.path() / "ul_sizes_e0.csv";
        io::write_file_atomic(file, replace_line(io::read_file(file), 4, "0"));
        try {
            load_dataset(manifest);
            FAIL("expected an error");
        } catch (const ValidationError& e) {
            CHECK(e.kind() == ValidationKind::non_positive_size);
            CHECK(e.row() == 4);
        }
    }
    SUBCASE("row with the wrong number of columns")
    {
        write_dataset(dir.path(), bank, fixture::synthetic(bank, 10, 1));
        const auto file = dir.path() / "scores_e0_m0.csv";
        io::write_file_atomic(file, replace_line(io::read_file(file), 2, "0.5,0.5"));
        try {
            load_dataset(manifest);
            FAIL("expected an error");
        } catch (const ValidationError& e) {
            CHECK(e.kind() == ValidationKind::dimension_mismatch);
            CHECK(e.row() == 2);
        }
    }
    SUBCASE("label out of range")
    {
        write_dataset(dir.path(), bank, fixture::synthetic(bank, 10, 1));
        const auto file = dir.path() / "labels.csv";
        io::write_file_atomic(file, replace_line(io::read_file(file), 5, "3"));
        try {
            load_dataset(manifest);
            FAIL("expected an error");
        } catch (const ValidationError& e) {
            CHECK(e.kind() == ValidationKind::label_out_of_range);
            CHECK(e.row() == 5);
        }
    }
}

TEST_CASE("bench-b model timings")
{
    const auto bank = presets::bench_b_bank();
    REQUIRE(bank.encoder_count() == 4);
    REQUIRE(bank.model_count() == 3);
    const double ul[] = {0.0100, 0.0125, 0.0150, 0.0175};
    const double f[] = {0.024, 0.057, 0.098};
    for (std::size_t l = 0; l < 4; ++l) {
        CHECK(bank.encoders[l].tau_ul_s == doctest::Approx(ul[l]).epsilon(1e-12));
    }
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(bank.models[k].tau_f_s == doctest::Approx(f[k]).epsilon(1e-12));
    }

    // Written through a manifest, the timings survive unchanged.
    fixture::TempDir dir("table");
    auto small = bank;
    small.label_count = 5;
    write_dataset(dir.path(), small, generate_synthetic(presets::default_synthetic(small, 1), 4, small));
    const auto loaded = load_dataset(dir.path() / "manifest.json");
    for (std::size_t l = 0; l < 4; ++l) {
        CHECK(loaded.bank.encoders[l].tau_ul_s == bank.encoders[l].tau_ul_s);
    }
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(loaded.bank.models[k].tau_f_s == bank.models[k].tau_f_s);
    }
}

TEST_CASE("model bank invariants")
{
    auto bank = fixture::small_bank(2, 3, 10);
    CHECK_NOTHROW(bank.validate());
    auto unsorted = bank;
    std::swap(unsorted.models[0], unsorted.models[2]);
    CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);
    auto one_label = bank;
    one_label.label_count = 1;
    CHECK_THROWS_AS(one_label.validate(), std::invalid_argument);
    auto negative = bank;
    negative.encoders[0].tau_ul_s = -1.0;
    CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
    auto tiny_label = bank;
    tiny_label.d_lbl_bits = 0.5;
    CHECK_THROWS_AS(tiny_label.validate(), std::invalid_argument);
}

TEST_CASE("write then load round-trips sizes and labels exactly and scores at 9 digits")
{
    fixture::TempDir dir("roundtrip");
    const auto bank = fixture::small_bank(2, 3, 7);
    const auto data = fixture::synthetic(bank, 60, 11);
    write_dataset(dir.path(), bank, data);
    const auto loaded = load_dataset(dir.path() / "manifest.json");

    CHECK(loaded.bank.label_count == bank.label_count);
    CHECK(loaded.bank.d_lbl_bits == bank.d_lbl_bits);
    CHECK(loaded.data.labels == data.labels);
    CHECK(loaded.data.ul_sizes == data.ul_sizes);
    for (std::size_t c = 0; c < data.scores.size(); ++c) {
        for (std::size_t i = 0; i < data.scores[c].values().size(); ++i) {
            const double expected = std::stod(io::format_double(data.scores[c].values()[i], 9));
            CHECK(loaded.data.scores[c].values()[i] == expected);
        }
    }

    // A second write of the loaded data is byte-identical.
    fixture::TempDir again("roundtrip2");
    write_dataset(again.path(), loaded.bank, loaded.data);
    for (const auto& entry : std::filesystem::directory_iterator(dir.path())) {
        CHECK(io::read_file(entry.path()) == io::read_file(again.path() / entry.path().filename()));
    }
}

TEST_CASE("write_dataset needs an existing directory")
{
    const auto bank = fixture::small_bank(1, 1, 3);
    CHECK_THROWS_WITH_AS(write_dataset("/nonexistent/dir/x", bank, fixture::synthetic(bank, 3, 1)),
                         doctest::Contains("/nonexistent/dir/x"), std::runtime_error);
}

TEST_CASE("synthetic generation is deterministic per seed")
{
    const auto bank = fixture::small_bank(2, 2, 10);
    const auto a = fixture::synthetic(bank, 50, 1);
    const auto b = fixture::synthetic(bank, 50, 1);
    const auto c = fixture::synthetic(bank, 50, 2);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK_NOTHROW(a.validate(bank));
}

TEST_CASE("synthetic accuracy 1 with high concentration gives the true label the strictly largest score")
{
    auto bank = fixture::small_bank(1, 1, 8);
    SyntheticModelConfig cfg = presets::default_synthetic(bank, 5);
    cfg.accuracy = {1.0};
    cfg.concentration = 1e3;
    const auto data = generate_synthetic(cfg, 500, bank);
    const auto& s = data.score_matrix(0, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto y = (*data.labels)[i];
        for (std::size_t j = 0; j < bank.label_count; ++j) {
            if (j != y) {
                REQUIRE(s(i, y) > s(i, j));
            }
        }
    }
}

TEST_CASE("synthetic top-1 accuracy matches the configured value")
{
    auto bank = fixture::small_bank(1, 1, 50);
    SyntheticModelConfig cfg = presets::default_synthetic(bank, 9);
    cfg.accuracy = {0.8};
    const auto data = generate_synthetic(cfg, 20000, bank);
    const auto& s = data.score_matrix(0, 0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto row = s.row(i);
        const auto arg = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        hits += arg == (*data.labels)[i];
    }
    CHECK(std::abs(static_cast<double>(hits) / 20000.0 - 0.8) <= 0.01);
}

TEST_CASE("synthetic scores are probability vectors and sizes are positive integers")
{
    const auto bank = presets::bench_a_bank();
    const auto data = generate_synthetic(presets::bench_a_synthetic(4), 200, bank);
    for (const auto& m : data.scores) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            double total = 0.0;
            for (double v : m.row(i)) {
                REQUIRE(v >= 0.0);
                REQUIRE(v <= 1.0);
                total += v;
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    for (const auto& sizes : data.ul_sizes) {
        for (double v : sizes) {
            REQUIRE(v >= 1.0);
            REQUIRE(v == std::round(v));
        }
    }
}

TEST_CASE("size-difficulty correlation couples uplink size to misses")
{
    auto bank = fixture::small_bank(1, 1, 20);
    auto cfg = presets::default_synthetic(bank, 2);
    cfg.accuracy = {0.7};
    cfg.size_difficulty_correlation = 0.9;
    const auto data = generate_synthetic(cfg, 4000, bank);
    double size_hit = 0.0;
    double size_miss = 0.0;
    std::size_t n_hit = 0;
    std::size_t n_miss = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto row = data.score_matrix(0, 0).row(i);
        const bool hit =
            static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()) == (*data.labels)[i];
        (hit ? size_hit : size_miss) += std::log(data.ul_sizes[0][i]);
        (hit ? n_hit : n_miss) += 1;
    }
    // Harder samples (misses) carry larger messages under positive correlation.
    CHECK(size_miss / static_cast<double>(n_miss) > size_hit / static_cast<double>(n_hit) + 0.1);
}

TEST_CASE("invalid synthetic configs are rejected")
{
    const auto bank = fixture::small_bank(2, 2, 10);
    auto cfg = presets::default_synthetic(bank, 1);
    CHECK_NOTHROW(cfg.validate(bank));
    auto bad = cfg;
    bad.accuracy.pop_back();
    CHECK_THROWS_AS(bad.validate(bank), std::invalid_argument);
    bad = cfg;
    bad.accuracy[0] = 0.0;
    CHECK_THROWS_AS(bad.validate(bank), std::invalid_argument);
    bad = cfg;
    bad.concentration = 0.0;
    CHECK_THROWS_AS(bad.validate(bank), std::invalid_argument);
    bad = cfg;
    bad.size_difficulty_correlation = 1.5;
    CHECK_THROWS_AS(bad.validate(bank), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic(cfg, 0, bank), std::invalid_argument);
}

TEST_CASE("split sizes, disjointness and errors")
{
    const auto bank = fixture::small_bank(1, 1, 5);
    const auto data = fixture::synthetic(bank, 30, 1);
    const auto parts = split(data, 10, 10, 7);
    CHECK(parts.labeled.size() == 10);
    CHECK(parts.unlabeled.size() == 10);
    CHECK(parts.evaluation.size() == 10);
    CHECK(parts.labeled.labeled());
    CHECK_FALSE(parts.unlabeled.labeled());
    CHECK(parts.evaluation.labeled());

    const auto small = fixture::synthetic(bank, 10, 1);
    CHECK_THROWS_AS(split(small, 10, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(split(small, 5, 5, 1), std::invalid_argument);

    // Property: random sizes give pairwise-disjoint partitions covering all samples.
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(300);
        const std::size_t a = rng.uniform_index(n);
        const std::size_t b = rng.uniform_index(n - a);
        const auto p = split_indices(n, a, b, rng.next_u64());
        REQUIRE(p.labeled.size() == a);
        REQUIRE(p.unlabeled.size() == b);
        REQUIRE(p.evaluation.size() == n - a - b);
        std::set<std::size_t> all(p.labeled.begin(), p.labeled.end());
        all.insert(p.unlabeled.begin(), p.unlabeled.end());
        all.insert(p.evaluation.begin(), p.evaluation.end());
        REQUIRE(all.size() == n);
        REQUIRE(*all.rbegin() == n - 1);
    }
    CHECK(split_indices(100, 20, 30, 5).labeled == split_indices(100, 20, 30, 5).labeled);
}

TEST_CASE("subset keeps rows in order and optionally drops labels")
{
    const auto bank = fixture::small_bank(2, 1, 4);
    const auto data = fixture::synthetic(bank, 8, 1);
    const std::vector<std::size_t> idx = {5, 2};
    const auto sub = data.subset(idx, false);
    CHECK_FALSE(sub.labeled());
    CHECK(sub.size() == 2);
    CHECK(sub.ul_sizes[1][0] == data.ul_sizes[1][5]);
    CHECK(sub.score_matrix(1, 0)(1, 3) == data.score_matrix(1, 0)(2, 3));
}
