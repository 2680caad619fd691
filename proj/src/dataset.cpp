#include "edgesel/dataset.hpp"

#include "edgesel/error.hpp"
#include "edgesel/io.hpp"
#include "edgesel/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace edgesel {

using nlohmann::json;

void ModelBank::validate() const
{
    if (encoders.empty() || models.empty()) {
        throw std::invalid_argument("model bank needs at least one encoder and one model");
    }
    if (label_count < 2) {
        throw std::invalid_argument("label_count must be at least 2");
    }
    if (!(d_lbl_bits >= 1.0) || !std::isfinite(d_lbl_bits)) {
        throw std::invalid_argument("d_lbl_bits must be finite and >= 1");
    }
    for (const auto& e : encoders) {
        if (!std::isfinite(e.tau_ul_s) || e.tau_ul_s < 0.0) {
            throw std::invalid_argument("encoder " + e.id + ": tau_ul must be finite and >= 0");
        }
    }
    for (std::size_t k = 0; k < models.size(); ++k) {
        const auto& m = models[k];
        if (!std::isfinite(m.tau_f_s) || m.tau_f_s < 0.0) {
            throw std::invalid_argument("model " + m.id + ": tau_f must be finite and >= 0");
        }
        if (k > 0 && m.tau_f_s < models[k - 1].tau_f_s) {
            throw std::invalid_argument("models must be sorted by non-decreasing tau_f");
        }
    }
}

ScoreMatrix::ScoreMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values))
{
    if (values_.size() != rows * cols) {
        throw std::invalid_argument("score matrix: value count does not match shape");
    }
}

std::span<const std::uint32_t> ScoreDataset::label_span() const
{
    if (!labels) {
        throw std::logic_error("dataset partition is unlabeled");
    }
    return *labels;
}

ScoreDataset ScoreDataset::subset(std::span<const std::size_t> indices, bool keep_labels) const
{
    ScoreDataset out;
    out.label_count = label_count;
    out.encoder_count = encoder_count;
    out.model_count = model_count;
    const std::size_t n = indices.size();
    if (labels && keep_labels) {
        std::vector<std::uint32_t> sub(n);
        for (std::size_t i = 0; i < n; ++i) {
            sub[i] = (*labels)[indices[i]];
        }
        out.labels = std::move(sub);
    }
    out.scores.reserve(scores.size());
    for (const auto& m : scores) {
        std::vector<double> values(n * label_count);
        for (std::size_t i = 0; i < n; ++i) {
            const auto src = m.row(indices[i]);
            std::copy(src.begin(), src.end(), values.begin() + static_cast<std::ptrdiff_t>(i * label_count));
        }
        out.scores.emplace_back(n, label_count, std::move(values));
    }
    out.ul_sizes.reserve(ul_sizes.size());
    for (const auto& sizes : ul_sizes) {
        std::vector<double> sub(n);
        for (std::size_t i = 0; i < n; ++i) {
            sub[i] = sizes[indices[i]];
        }
        out.ul_sizes.push_back(std::move(sub));
    }
    return out;
}

void ScoreDataset::validate(const ModelBank& bank) const
{
    if (label_count != bank.label_count || encoder_count != bank.encoder_count() ||
        model_count != bank.model_count()) {
        throw std::invalid_argument("dataset shape does not match model bank");
    }
    if (scores.size() != bank.combination_count() || ul_sizes.size() != encoder_count) {
        throw std::invalid_argument("dataset: wrong number of score matrices or size vectors");
    }
    const std::size_t n = size();
    for (const auto& sizes : ul_sizes) {
        if (sizes.size() != n) {
            throw std::invalid_argument("dataset: size vectors differ in length");
        }
        for (const double s : sizes) {
            if (!(s > 0.0) || !std::isfinite(s)) {
                throw std::invalid_argument("dataset: uplink sizes must be positive and finite");
            }
        }
    }
    for (const auto& m : scores) {
        if (m.rows() != n || m.cols() != label_count) {
            throw std::invalid_argument("dataset: score matrix shape mismatch");
        }
        for (const double v : m.values()) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw std::invalid_argument("dataset: score outside [0,1]");
            }
        }
    }
    if (labels) {
        if (labels->size() != n) {
            throw std::invalid_argument("dataset: label count mismatch");
        }
        for (const auto y : *labels) {
            if (y >= label_count) {
                throw std::invalid_argument("dataset: label out of range");
            }
        }
    }
}

Partition split_indices(std::size_t n, std::size_t n_labeled, std::size_t n_unlabeled, std::uint64_t seed)
{
    if (n_labeled + n_unlabeled >= n) {
        throw std::invalid_argument("split: n_labeled + n_unlabeled must be smaller than the sample count (" +
                                    std::to_string(n_labeled) + " + " + std::to_string(n_unlabeled) +
                                    " >= " + std::to_string(n) + ")");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x5e1177));
    for (std::size_t i = n; i > 1; --i) {
        std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    }
    const auto b = perm.begin();
    const auto nl = static_cast<std::ptrdiff_t>(n_labeled);
    const auto nu = static_cast<std::ptrdiff_t>(n_labeled + n_unlabeled);
    Partition p;
    p.labeled.assign(b, b + nl);
    p.unlabeled.assign(b + nl, b + nu);
    p.evaluation.assign(b + nu, perm.end());
    return p;
}

DatasetSplit split(const ScoreDataset& data, std::size_t n_labeled, std::size_t n_unlabeled, std::uint64_t seed)
{
    if (!data.labeled()) {
        throw std::invalid_argument("split: dataset has no labels");
    }
    DatasetSplit out;
    out.indices = split_indices(data.size(), n_labeled, n_unlabeled, seed);
    out.labeled = data.subset(out.indices.labeled);
    out.unlabeled = data.subset(out.indices.unlabeled, false);
    out.evaluation = data.subset(out.indices.evaluation);
    return out;
}

// ---------------------------------------------------------------------------
// Manifest + CSV files

namespace {

std::vector<std::string_view> data_lines(const std::string& text)
{
    std::vector<std::string_view> lines = io::split(text, '\n');
    while (!lines.empty() && io::trim(lines.back()).empty()) {
        lines.pop_back();
    }
    return lines;
}

std::vector<double> read_sizes(const std::filesystem::path& path, std::size_t expected)
{
    const std::string text = io::read_file(path);
    const auto lines = data_lines(text);
    if (lines.size() != expected) {
        throw ValidationError(ValidationKind::dimension_mismatch, path.string(), 0,
                              "expected " + std::to_string(expected) + " rows, found " +
                                  std::to_string(lines.size()));
    }
    std::vector<double> sizes(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        double v = 0.0;
        if (!io::parse_double(lines[i], v)) {
            throw ValidationError(ValidationKind::malformed, path.string(), i + 1,
                                  "not a number: '" + std::string(io::trim(lines[i])) + "'");
        }
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ValidationError(ValidationKind::non_positive_size, path.string(), i + 1,
                                  "size must be positive and finite");
        }
        sizes[i] = v;
    }
    return sizes;
}

std::vector<std::uint32_t> read_labels(const std::filesystem::path& path, std::size_t label_count)
{
    const std::string text = io::read_file(path);
    const auto lines = data_lines(text);
    std::vector<std::uint32_t> labels(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::uint64_t v = 0;
        if (!io::parse_uint(lines[i], v)) {
            throw ValidationError(ValidationKind::malformed, path.string(), i + 1,
                                  "not a label index: '" + std::string(io::trim(lines[i])) + "'");
        }
        if (v >= label_count) {
            throw ValidationError(ValidationKind::label_out_of_range, path.string(), i + 1,
                                  "label " + std::to_string(v) + " >= " + std::to_string(label_count));
        }
        labels[i] = static_cast<std::uint32_t>(v);
    }
    return labels;
}

ScoreMatrix read_scores(const std::filesystem::path& path, std::size_t rows, std::size_t cols)
{
    const std::string text = io::read_file(path);
    const auto lines = data_lines(text);
    if (lines.size() != rows) {
        throw ValidationError(ValidationKind::dimension_mismatch, path.string(), 0,
                              "expected " + std::to_string(rows) + " rows, found " +
                                  std::to_string(lines.size()));
    }
    std::vector<double> values(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto fields = io::split(lines[i], ',');
        if (fields.size() != cols) {
            throw ValidationError(ValidationKind::dimension_mismatch, path.string(), i + 1,
                                  "expected " + std::to_string(cols) + " columns, found " +
                                      std::to_string(fields.size()));
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double v = 0.0;
            if (!io::parse_double(fields[j], v)) {
                throw ValidationError(ValidationKind::malformed, path.string(), i + 1,
                                      "column " + std::to_string(j + 1) + " is not a number");
            }
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ValidationError(ValidationKind::score_out_of_range, path.string(), i + 1,
                                      "column " + std::to_string(j + 1) + " = " + io::format_double(v, 9));
            }
            values[i * cols + j] = v;
        }
    }
    return ScoreMatrix(rows, cols, std::move(values));
}

template <typename T>
T field(const json& obj, const char* key, const std::string& file)
{
    if (!obj.is_object() || !obj.contains(key)) {
        throw ValidationError(ValidationKind::malformed, file, 0, std::string("missing field '") + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(ValidationKind::malformed, file, 0, std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

LoadedDataset load_dataset(const std::filesystem::path& manifest_path)
{
    const std::string file = manifest_path.string();
    json manifest;
    try {
        manifest = json::parse(io::read_file(manifest_path));
    } catch (const json::parse_error& e) {
        throw ValidationError(ValidationKind::malformed, file, 0, e.what());
    }
    const auto base = manifest_path.parent_path();

    LoadedDataset out;
    ModelBank& bank = out.bank;
    bank.label_count = field<std::size_t>(manifest, "label_count", file);
    bank.d_lbl_bits = field<double>(manifest, "d_lbl_bits", file);

    const auto encoders = field<json>(manifest, "encoders", file);
    const auto models = field<json>(manifest, "models", file);
    const auto scores = field<json>(manifest, "scores", file);
    if (!encoders.is_array() || !models.is_array() || !scores.is_array()) {
        throw ValidationError(ValidationKind::malformed, file, 0, "encoders, models and scores must be arrays");
    }
    std::vector<std::string> size_files;
    for (const auto& e : encoders) {
        bank.encoders.push_back({field<std::string>(e, "id", file), field<double>(e, "tau_ul_s", file)});
        size_files.push_back(field<std::string>(e, "ul_sizes_file", file));
    }
    for (const auto& m : models) {
        bank.models.push_back({field<std::string>(m, "id", file), field<double>(m, "tau_f_s", file)});
    }
    try {
        bank.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(ValidationKind::malformed, file, 0, e.what());
    }

    const auto find_index = [&](const auto& list, const std::string& id, const char* what) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (list[i].id == id) {
                return i;
            }
        }
        throw ValidationError(ValidationKind::malformed, file, 0, std::string("unknown ") + what + " id '" + id + "'");
    };

    ScoreDataset& data = out.data;
    data.label_count = bank.label_count;
    data.encoder_count = bank.encoder_count();
    data.model_count = bank.model_count();

    std::optional<std::size_t> n;
    if (manifest.contains("labels_file") && !manifest["labels_file"].is_null()) {
        data.labels = read_labels(base / field<std::string>(manifest, "labels_file", file), bank.label_count);
        n = data.labels->size();
    }
    for (const auto& sf : size_files) {
        const auto path = base / sf;
        if (!n) {
            const std::string text = io::read_file(path);
            n = data_lines(text).size();
        }
        data.ul_sizes.push_back(read_sizes(path, *n));
    }

    data.scores.resize(bank.combination_count());
    std::vector<bool> seen(bank.combination_count(), false);
    for (const auto& s : scores) {
        const auto l = find_index(bank.encoders, field<std::string>(s, "encoder_id", file), "encoder");
        const auto k = find_index(bank.models, field<std::string>(s, "model_id", file), "model");
        const auto idx = bank.combination_index(l, k);
        if (seen[idx]) {
            throw ValidationError(ValidationKind::malformed, file, 0,
                                  "duplicate scores for " + bank.encoders[l].id + "/" + bank.models[k].id);
        }
        seen[idx] = true;
        data.scores[idx] = read_scores(base / field<std::string>(s, "file", file), *n, bank.label_count);
    }
    for (std::size_t idx = 0; idx < seen.size(); ++idx) {
        if (!seen[idx]) {
            const auto l = idx / bank.model_count();
            const auto k = idx % bank.model_count();
            throw ValidationError(ValidationKind::dimension_mismatch, file, 0,
                                  "no scores for " + bank.encoders[l].id + "/" + bank.models[k].id);
        }
    }
    return out;
}

void write_dataset(const std::filesystem::path& dir, const ModelBank& bank, const ScoreDataset& data)
{
    bank.validate();
    data.validate(bank);
    if (!std::filesystem::is_directory(dir)) {
        throw std::runtime_error("output directory does not exist: " + dir.string());
    }

    json manifest;
    manifest["label_count"] = bank.label_count;
    manifest["d_lbl_bits"] = bank.d_lbl_bits;
    manifest["encoders"] = json::array();
    manifest["models"] = json::array();
    manifest["scores"] = json::array();

    for (std::size_t l = 0; l < bank.encoder_count(); ++l) {
        const std::string name = "ul_sizes_e" + std::to_string(l) + ".csv";
        std::string text;
        text.reserve(data.size() * 8);
        for (const double s : data.ul_sizes[l]) {
            text += io::format_double(std::round(s), 17);
            text += '\n';
        }
        io::write_file_atomic(dir / name, text);
        manifest["encoders"].push_back(
            {{"id", bank.encoders[l].id}, {"tau_ul_s", bank.encoders[l].tau_ul_s}, {"ul_sizes_file", name}});
    }
    for (const auto& m : bank.models) {
        manifest["models"].push_back({{"id", m.id}, {"tau_f_s", m.tau_f_s}});
    }
    for (std::size_t l = 0; l < bank.encoder_count(); ++l) {
        for (std::size_t k = 0; k < bank.model_count(); ++k) {
            const std::string name = "scores_e" + std::to_string(l) + "_m" + std::to_string(k) + ".csv";
            const auto& m = data.score_matrix(l, k);
            std::string text;
            text.reserve(m.rows() * m.cols() * 12);
            for (std::size_t i = 0; i < m.rows(); ++i) {
                const auto row = m.row(i);
                for (std::size_t j = 0; j < row.size(); ++j) {
                    if (j > 0) {
                        text += ',';
                    }
                    text += io::format_double(row[j], 9);
                }
                text += '\n';
            }
            io::write_file_atomic(dir / name, text);
            manifest["scores"].push_back(
                {{"encoder_id", bank.encoders[l].id}, {"model_id", bank.models[k].id}, {"file", name}});
        }
    }
    if (data.labels) {
        std::string text;
        for (const auto y : *data.labels) {
            text += std::to_string(y);
            text += '\n';
        }
        io::write_file_atomic(dir / "labels.csv", text);
        manifest["labels_file"] = "labels.csv";
    } else {
        manifest["labels_file"] = nullptr;
    }
    io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace edgesel
