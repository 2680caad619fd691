#include "edgesel/commands.hpp"

#include "edgesel/error.hpp"
#include "edgesel/experiment.hpp"
#include "edgesel/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <ostream>

namespace edgesel {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

/// Flags shared by every command that works on a calibrated dataset. Each
/// one overrides the config file only when given on the command line.
struct CommonFlags {
    std::string config_path;
    std::string manifest;
    std::string preset;
    std::size_t data_n = 0;
    std::uint64_t data_seed = 0;
    std::size_t labels = 0;
    std::size_t n_labeled = 0;
    std::size_t n_unlabeled = 0;
    std::uint64_t split_seed = 0;
    double alpha = 0.0;
    double beta = 0.0;
    std::string loss;
    double gamma = 0.0;
    double deadline = 0.0;
    double bandwidth = 0.0;
    std::string grid;
    bool exact_grid = false;

    std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> setters;

    template <typename T, typename Apply>
    void add(CLI::App* app, const std::string& name, T& field, const std::string& help, Apply apply)
    {
        auto* opt = app->add_option(name, field, help);
        setters.emplace_back(opt, [&field, apply](ExperimentConfig& c) { apply(c, field); });
    }

    void attach(CLI::App* app)
    {
        add(app, "--manifest", manifest, "dataset manifest (default: generate synthetic data)",
            [](ExperimentConfig& c, const std::string& v) { c.manifest = v; });
        add(app, "--preset", preset, "synthetic preset: bench-a | bench-b",
            [](ExperimentConfig& c, const std::string& v) { c.preset = v; });
        add(app, "--data-n", data_n, "synthetic sample count",
            [](ExperimentConfig& c, std::size_t v) { c.synthetic_n = v; });
        add(app, "--data-seed", data_seed, "synthetic data seed",
            [](ExperimentConfig& c, std::uint64_t v) { c.data_seed = v; });
        add(app, "--labels", labels, "synthetic label count",
            [](ExperimentConfig& c, std::size_t v) { c.label_count = v; });
        add(app, "--n-labeled", n_labeled, "labeled calibration samples",
            [](ExperimentConfig& c, std::size_t v) { c.n_labeled = v; });
        add(app, "--n-unlabeled", n_unlabeled, "unlabeled calibration samples",
            [](ExperimentConfig& c, std::size_t v) { c.n_unlabeled = v; });
        add(app, "--split-seed", split_seed, "seed of the calibration/evaluation split",
            [](ExperimentConfig& c, std::uint64_t v) { c.split_seed = v; });
        add(app, "--alpha", alpha, "loss requirement", [](ExperimentConfig& c, double v) { c.alpha = v; });
        add(app, "--beta", beta, "deadline-violation requirement",
            [](ExperimentConfig& c, double v) { c.beta = v; });
        add(app, "--loss", loss, "miss_detection_01 | false_negative_rate",
            [](ExperimentConfig& c, const std::string& v) { c.loss = v; });
        add(app, "--gamma", gamma, "loss upper bound", [](ExperimentConfig& c, double v) { c.gamma = v; });
        add(app, "--deadline", deadline, "frame deadline in seconds",
            [](ExperimentConfig& c, double v) { c.deadline_s = v; });
        add(app, "--bandwidth", bandwidth, "bandwidth in Hz",
            [](ExperimentConfig& c, double v) { c.bandwidth_hz = v; });
        add(app, "--grid", grid, "bound grid: exact | subgrid", [](ExperimentConfig& c, const std::string& v) {
            if (v == "exact") {
                c.grid = GridMode::exact;
            } else if (v == "subgrid") {
                c.grid = GridMode::subgrid;
            } else {
                throw std::invalid_argument("--grid must be exact or subgrid");
            }
        });
        auto* flag = app->add_flag("--exact-grid", exact_grid, "scan every (n, m) pair (default)");
        setters.emplace_back(flag, [](ExperimentConfig& c) { c.grid = GridMode::exact; });
        app->add_option("--config", config_path, "experiment config JSON; flags override it");
    }

    ExperimentConfig build() const
    {
        ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
        for (const auto& [opt, set] : setters) {
            if (opt->count() > 0) {
                set(c);
            }
        }
        return c;
    }
};

void require_directory(const fs::path& dir)
{
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("output directory does not exist: " + dir.string());
    }
}

std::string file_safe(std::string name)
{
    std::replace(name.begin(), name.end(), ':', '_');
    return name;
}

ordered_json provenance(const ExperimentConfig& config)
{
    return {{"config_hash", config.hash()}, {"seed", config.seed}};
}

const char* status_name(CandidateStatus s)
{
    switch (s) {
    case CandidateStatus::ok: return "ok";
    case CandidateStatus::timing_infeasible: return "timing_infeasible";
    case CandidateStatus::calibration_infeasible: return "calibration_infeasible";
    }
    return "unknown";
}

ordered_json trace_json(const std::vector<CandidateScore>& scores, const ModelBank& bank)
{
    ordered_json rows = ordered_json::array();
    for (const auto& s : scores) {
        rows.push_back({{"encoder_id", bank.encoders[s.encoder].id},
                        {"model_id", bank.models[s.model].id},
                        {"bound", s.bound},
                        {"expected_set_size", std::isfinite(s.set_size) ? ordered_json(s.set_size) : ordered_json()},
                        {"status", status_name(s.status)}});
    }
    return rows;
}

int cmd_gen_data(const fs::path& out_dir, const std::string& preset, std::size_t n, std::size_t labels,
                 std::uint64_t seed, std::ostream& out)
{
    require_directory(out_dir);
    const auto data = synthetic_dataset(preset, n, labels, seed);
    write_dataset(out_dir, data.bank, data.data);
    out << "wrote " << n << " samples (" << data.bank.encoder_count() << " encoders, "
        << data.bank.model_count() << " models, " << data.bank.label_count << " labels) to "
        << (out_dir / "manifest.json").string() << "\n";
    return exit_ok;
}

int cmd_calibrate(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& out, std::ostream& err)
{
    require_directory(out_dir);
    const auto exp = prepare(config);
    ordered_json summary = provenance(config);
    summary["epsilon"] = exp.catalog.epsilon();
    summary["models"] = ordered_json::array();
    bool all_ok = true;
    for (const auto& c : exp.catalog.candidates()) {
        const auto& enc = exp.bank.encoders[c.encoder].id;
        const auto& mod = exp.bank.models[c.model].id;
        ordered_json row = {{"encoder_id", enc}, {"model_id", mod}};
        if (c.calibration) {
            auto j = ordered_json::parse(calibration_json(*c.calibration, exp.bank));
            j["config_hash"] = config.hash();
            j["seed"] = config.seed;
            const auto name = "calibration_" + enc + "_" + mod + ".json";
            io::write_file_atomic(out_dir / file_safe(name), j.dump(2) + "\n");
            row["status"] = "ok";
            row["lambda"] = c.calibration->lambda;
            row["file"] = file_safe(name);
            out << enc << "/" << mod << ": lambda = " << io::format_double(c.calibration->lambda, 9)
                << ", epsilon = " << io::format_double(exp.catalog.epsilon(), 6) << "\n";
        } else {
            all_ok = false;
            row["status"] = "infeasible";
            row["diagnostic"] = c.diagnostic;
            err << "calibration infeasible: " << c.diagnostic << "\n";
        }
        summary["models"].push_back(row);
    }
    io::write_file_atomic(out_dir / "calibration_summary.json", summary.dump(2) + "\n");
    return all_ok ? exit_ok : exit_infeasible;
}

int cmd_select(const ExperimentConfig& config, double snr_db, std::optional<double> snr_dl_db,
               std::optional<double> rate_ul, const std::string& out_file, std::ostream& out)
{
    const auto exp = prepare(config);
    const auto channel = config.channel().with_snr_db(snr_db, snr_dl_db.value_or(snr_db));
    const auto grid = config.grid_options();
    ordered_json j = provenance(config);
    j["snr_db"] = snr_db;
    j["snr_dl_db"] = snr_dl_db.value_or(snr_db);
    const auto scores = score_fixed(exp.catalog, channel, grid);
    const auto fixed = fixed_select(exp.catalog, channel, grid);
    j["fixed"] = ordered_json::parse(selection_json(fixed, exp.bank));
    j["candidates"] = trace_json(scores, exp.bank);
    if (rate_ul) {
        const auto dyn = dynamic_select(fixed.encoder, exp.catalog, channel, *rate_ul, grid);
        j["rate_ul"] = *rate_ul;
        j["dynamic"] = ordered_json::parse(selection_json(dyn, exp.bank));
        j["dynamic_candidates"] = trace_json(score_dynamic(fixed.encoder, exp.catalog, channel, *rate_ul, grid), exp.bank);
    }
    const auto text = j.dump(2) + "\n";
    if (out_file.empty()) {
        out << text;
    } else {
        io::write_file_atomic(out_file, text);
        out << "selected " << exp.bank.encoders[fixed.encoder].id << "/" << exp.bank.models[fixed.model].id
            << " (bound " << io::format_double(fixed.bound, 6) << (fixed.feasible ? ", feasible" : ", infeasible")
            << ")\n";
    }
    return exit_ok;
}

int cmd_evaluate(const ExperimentConfig& config, const fs::path& out_dir, bool write_frames, std::ostream& out)
{
    require_directory(out_dir);
    const auto exp = prepare(config);
    const auto result = run_pipeline(config, exp, 0, write_frames);
    auto run = config.to_json();
    run["config_hash"] = config.hash();
    io::write_file_atomic(out_dir / "run.json", run.dump(2) + "\n");
    if (write_frames) {
        const auto points = config.snr_points();
        for (std::size_t s = 0; s < result.schemes.size(); ++s) {
            const auto name = result.schemes[s].name();
            std::string csv = provenance_line(config) + "\n" + frames_csv_header() + "\n";
            for (std::size_t p = 0; p < points.size(); ++p) {
                for (const auto& f : result.evaluations[s].frames[p]) {
                    csv += frame_csv_row(f, points[p], name) + "\n";
                }
            }
            io::write_file_atomic(out_dir / ("frames_" + file_safe(name) + ".csv"), csv);
        }
    }
    io::write_file_atomic(out_dir / "report.csv", result.report_csv);
    out << result.report_csv;
    return exit_ok;
}

int cmd_sweep(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& out, std::ostream& err)
{
    require_directory(out_dir);
    const int cal = cmd_calibrate(config, out_dir, out, err);
    if (cal != exit_ok) {
        return cal;
    }
    const auto exp = prepare(config);
    std::string csv = provenance_line(config) + "\nsnr_db,snr_dl_db,encoder_id,model_id,bound,expected_set_size,status,selected\n";
    for (const auto& p : config.snr_points()) {
        const auto channel = config.channel().with_snr_db(p.ul_db, p.dl_db);
        const auto scores = score_fixed(exp.catalog, channel, config.grid_options());
        const auto best = select_best(scores, exp.catalog.beta());
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const auto& s = scores[i];
            csv += io::format_exact(p.ul_db) + "," + io::format_exact(p.dl_db) + "," +
                   exp.bank.encoders[s.encoder].id + "," + exp.bank.models[s.model].id + "," +
                   io::format_exact(s.bound) + "," + io::format_exact(s.set_size) + "," + status_name(s.status) +
                   "," + (best && *best == i ? "1" : "0") + "\n";
        }
    }
    io::write_file_atomic(out_dir / "selection.csv", csv);
    return cmd_evaluate(config, out_dir, false, out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Edge inference model selection with conformal loss control and deadline-violation bounds", "edgesel"};
    app.require_subcommand(1);

    std::string out_path;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic score dataset");
    std::string gen_preset = "bench-a";
    std::size_t gen_n = 8000;
    std::size_t gen_labels = 0;
    std::uint64_t gen_seed = 1;
    gen->add_option("--out", out_path, "existing output directory")->required();
    gen->add_option("--preset", gen_preset, "bench-a | bench-b")->capture_default_str();
    gen->add_option("--n", gen_n, "number of samples")->capture_default_str();
    gen->add_option("--labels", gen_labels, "label count (default: preset)");
    gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();

    CommonFlags cal_flags;
    auto* cal = app.add_subcommand("calibrate", "compute the conformal threshold of every composite model");
    cal_flags.attach(cal);
    cal->add_option("--out", out_path, "existing output directory")->required();

    CommonFlags sel_flags;
    auto* sel = app.add_subcommand("select", "choose a composite model for given channel statistics");
    sel_flags.attach(sel);
    double sel_snr = 10.0;
    std::optional<double> sel_snr_dl;
    std::optional<double> sel_rate;
    sel->add_option("--snr-db", sel_snr, "average SNR in dB (both links)")->capture_default_str();
    sel->add_option("--snr-dl-db", sel_snr_dl, "downlink SNR in dB, if different");
    sel->add_option("--rate-ul", sel_rate, "observed uplink rate in bit/s; adds the per-frame choice")
        ->check(CLI::PositiveNumber);
    sel->add_option("--out", out_path, "output JSON file (default: stdout)");

    CommonFlags eval_flags;
    auto* eval = app.add_subcommand("evaluate", "Monte Carlo evaluation over an SNR grid");
    eval_flags.attach(eval);
    std::string schemes;
    std::string snr_grid;
    std::string snr_dl_grid;
    std::size_t frames = 0;
    std::uint64_t seed = 0;
    bool no_frames = false;
    auto* o_schemes = eval->add_option("--schemes", schemes, "comma-separated scheme list");
    auto* o_snr = eval->add_option("--snr-db", snr_grid, "SNR grid START:STOP:COUNT in dB");
    auto* o_snr_dl = eval->add_option("--snr-dl-db", snr_dl_grid, "downlink SNR grid, if different");
    auto* o_frames = eval->add_option("--frames", frames, "frames per SNR point");
    auto* o_seed = eval->add_option("--seed", seed, "master seed of the frame draws");
    eval->add_flag("--no-frame-log", no_frames, "skip the per-frame CSV files");
    eval->add_option("--out", out_path, "existing output directory")->required();

    CommonFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "calibrate, trace the offline selection and evaluate, from one config");
    sweep_flags.attach(sweep);
    sweep->add_option("--out", out_path, "existing output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen_data(out_path, gen_preset, gen_n, gen_labels, gen_seed, out);
        }
        if (cal->parsed()) {
            return cmd_calibrate(cal_flags.build(), out_path, out, err);
        }
        if (sel->parsed()) {
            return cmd_select(sel_flags.build(), sel_snr, sel_snr_dl, sel_rate, out_path, out);
        }
        if (eval->parsed()) {
            auto config = eval_flags.build();
            if (o_schemes->count() > 0) {
                config.schemes.clear();
                for (const auto part : io::split(schemes, ',')) {
                    config.schemes.emplace_back(io::trim(part));
                }
            }
            if (o_snr->count() > 0) {
                config.snr_db = snr_grid;
            }
            if (o_snr_dl->count() > 0) {
                config.snr_dl_db = snr_dl_grid;
            }
            if (o_frames->count() > 0) {
                config.frames = frames;
            }
            if (o_seed->count() > 0) {
                config.seed = seed;
            }
            return cmd_evaluate(config, out_path, !no_frames, out);
        }
        if (sweep->parsed()) {
            if (sweep_flags.config_path.empty()) {
                err << "sweep needs --config\n";
                return exit_usage;
            }
            return cmd_sweep(sweep_flags.build(), out_path, out, err);
        }
    } catch (const InfeasibleCalibration& e) {
        err << "infeasible: " << e.what() << "\n";
        return exit_infeasible;
    } catch (const InfeasibleTiming& e) {
        err << "infeasible: " << e.what() << "\n";
        return exit_infeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_usage;
}

}  // namespace edgesel
