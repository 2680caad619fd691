#include "edgesel/experiment.hpp"

#include "edgesel/io.hpp"

#include <set>
#include <stdexcept>

namespace edgesel {

using nlohmann::json;
using nlohmann::ordered_json;

nlohmann::ordered_json ExperimentConfig::to_json() const
{
    ordered_json j;
    j["manifest"] = manifest ? ordered_json(manifest->string()) : ordered_json(nullptr);
    j["preset"] = preset;
    j["synthetic_n"] = synthetic_n;
    j["label_count"] = label_count;
    j["data_seed"] = data_seed;
    j["n_labeled"] = n_labeled;
    j["n_unlabeled"] = n_unlabeled;
    j["split_seed"] = split_seed;
    j["bandwidth_hz"] = bandwidth_hz;
    j["deadline_s"] = deadline_s;
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["loss"] = loss;
    j["gamma"] = gamma;
    j["schemes"] = schemes;
    j["snr_db"] = snr_db;
    j["snr_dl_db"] = snr_dl_db ? ordered_json(*snr_dl_db) : ordered_json(nullptr);
    j["frames"] = frames;
    j["seed"] = seed;
    j["grid"] = grid == GridMode::exact ? "exact" : "subgrid";
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw std::invalid_argument("experiment config must be a JSON object");
    }
    static const std::set<std::string> known = {
        "manifest", "preset", "synthetic_n", "label_count", "data_seed", "n_labeled", "n_unlabeled",
        "split_seed", "bandwidth_hz", "deadline_s", "alpha", "beta", "loss", "gamma", "schemes",
        "snr_db", "snr_dl_db", "frames", "seed", "grid"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) {
            throw std::invalid_argument("experiment config: unknown key '" + key + "'");
        }
    }
    ExperimentConfig c;
    try {
        if (j.contains("manifest") && !j["manifest"].is_null()) {
            c.manifest = j["manifest"].get<std::string>();
        }
        c.preset = j.value("preset", c.preset);
        c.synthetic_n = j.value("synthetic_n", c.synthetic_n);
        c.label_count = j.value("label_count", c.label_count);
        c.data_seed = j.value("data_seed", c.data_seed);
        c.n_labeled = j.value("n_labeled", c.n_labeled);
        c.n_unlabeled = j.value("n_unlabeled", c.n_unlabeled);
        c.split_seed = j.value("split_seed", c.split_seed);
        c.bandwidth_hz = j.value("bandwidth_hz", c.bandwidth_hz);
        c.deadline_s = j.value("deadline_s", c.deadline_s);
        c.alpha = j.value("alpha", c.alpha);
        c.beta = j.value("beta", c.beta);
        c.loss = j.value("loss", c.loss);
        c.gamma = j.value("gamma", c.gamma);
        c.schemes = j.value("schemes", c.schemes);
        c.snr_db = j.value("snr_db", c.snr_db);
        if (j.contains("snr_dl_db") && !j["snr_dl_db"].is_null()) {
            c.snr_dl_db = j["snr_dl_db"].get<std::string>();
        }
        c.frames = j.value("frames", c.frames);
        c.seed = j.value("seed", c.seed);
        const auto grid = j.value("grid", std::string("exact"));
        if (grid == "exact") {
            c.grid = GridMode::exact;
        } else if (grid == "subgrid") {
            c.grid = GridMode::subgrid;
        } else {
            throw std::invalid_argument("experiment config: grid must be 'exact' or 'subgrid'");
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("experiment config: ") + e.what());
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path)
{
    const auto text = io::read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return from_json(j);
}

void ExperimentConfig::validate() const
{
    if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0)) {
        throw std::invalid_argument("alpha and beta must lie in (0, 1)");
    }
    if (manifest && !std::filesystem::exists(*manifest)) {
        throw std::invalid_argument("manifest not found: " + manifest->string());
    }
    if (!manifest && preset != "bench-a" && preset != "bench-b") {
        throw std::invalid_argument("unknown preset '" + preset + "' (expected bench-a or bench-b)");
    }
    if (frames < 1) {
        throw std::invalid_argument("frames must be at least 1");
    }
    if (schemes.empty()) {
        throw std::invalid_argument("no schemes requested");
    }
    LossFunction::parse(loss, gamma);
    channel().validate();
    scheme_specs();
    if (snr_points().empty()) {
        throw std::invalid_argument("SNR grid is empty");
    }
}

std::string ExperimentConfig::hash() const
{
    return io::hex64(io::fnv1a(to_json().dump()));
}

std::vector<SnrPoint> ExperimentConfig::snr_points() const
{
    auto points = parse_snr_grid(snr_db);
    if (snr_dl_db) {
        const auto dl = parse_snr_grid(*snr_dl_db);
        if (dl.size() != points.size()) {
            throw std::invalid_argument("uplink and downlink SNR grids differ in length");
        }
        for (std::size_t i = 0; i < points.size(); ++i) {
            points[i].dl_db = dl[i].ul_db;
        }
    }
    return points;
}

std::vector<SchemeSpec> ExperimentConfig::scheme_specs() const
{
    std::vector<SchemeSpec> out;
    for (const auto& s : schemes) {
        out.push_back(SchemeSpec::parse(s));
    }
    return out;
}

GridOptions ExperimentConfig::grid_options() const
{
    GridOptions g;
    g.mode = grid;
    return g;
}

ChannelConfig ExperimentConfig::channel() const
{
    ChannelConfig c;
    c.bandwidth_hz = bandwidth_hz;
    c.deadline_s = deadline_s;
    return c;
}

LoadedDataset synthetic_dataset(const std::string& preset, std::size_t n, std::size_t label_count,
                                std::uint64_t seed)
{
    LoadedDataset out;
    SyntheticModelConfig synth;
    if (preset == "bench-a") {
        out.bank = presets::bench_a_bank();
        synth = presets::bench_a_synthetic(seed);
    } else if (preset == "bench-b") {
        out.bank = presets::bench_b_bank(label_count > 0 ? label_count : 1000);
        synth = presets::default_synthetic(out.bank, seed);
    } else {
        throw std::invalid_argument("unknown preset '" + preset + "' (expected bench-a or bench-b)");
    }
    if (label_count > 0) {
        out.bank.label_count = label_count;
    }
    out.data = generate_synthetic(synth, n, out.bank);
    return out;
}

Experiment prepare(const ExperimentConfig& config)
{
    config.validate();
    LoadedDataset loaded = config.manifest
                               ? load_dataset(*config.manifest)
                               : synthetic_dataset(config.preset, config.synthetic_n, config.label_count,
                                                   config.data_seed);
    if (!loaded.data.labeled()) {
        throw std::invalid_argument("dataset has no labels; calibration and evaluation need them");
    }
    auto parts = split(loaded.data, config.n_labeled, config.n_unlabeled, config.split_seed);
    const auto loss = LossFunction::parse(config.loss, config.gamma);
    auto catalog = ModelCatalog::build(loaded.bank, parts.labeled, parts.unlabeled, loss, config.alpha, config.beta);
    for (const auto& spec : config.scheme_specs()) {
        spec.validate(loaded.bank);
    }
    return {std::move(loaded.bank), std::move(parts), std::move(catalog)};
}

std::string provenance_line(const ExperimentConfig& config)
{
    return "# config_hash=" + config.hash() + ",seed=" + std::to_string(config.seed);
}

PipelineResult run_pipeline(const ExperimentConfig& config, const Experiment& experiment, std::size_t workers,
                            bool keep_frames)
{
    PipelineResult result;
    result.schemes = config.scheme_specs();
    EvaluationOptions options;
    options.snr_points = config.snr_points();
    options.n_frames = config.frames;
    options.seed = config.seed;
    options.grid = config.grid_options();
    options.workers = workers;
    options.keep_frames = keep_frames;

    std::string csv = provenance_line(config) + "\n" + report_csv_header() + "\n";
    for (const auto& scheme : result.schemes) {
        auto eval = evaluate(scheme, experiment.catalog, experiment.split.evaluation, config.channel(), options);
        for (const auto& r : eval.reports) {
            csv += report_csv_row(r, experiment.bank) + "\n";
        }
        result.evaluations.push_back(std::move(eval));
    }
    result.report_csv = std::move(csv);
    return result;
}

}  // namespace edgesel
